"""Truncated mode algebra with provable-exactness bookkeeping.

The state space is a polynomial algebra over modes alpha_n (n a nonzero
integer) carrying the deformed Poisson bracket

    {alpha_n, alpha_m} = sgn(n) (1 - q**|n|) delta_{n+m, 0},   q = s**2.

Work happens in a truncation: modes up to +-n_modes, polynomial degree up to
d_deg, and Laurent slots (exponents of the formal variables z, w, ...) up to
+-n_modes per variable.  Truncation alone is not a proof, so every series
carries a Guarantee(budget, degree): a stored coefficient cell (slots s,
monomial mu) is certified equal to its untruncated value whenever

    sum_i |s_i| + weight(mu) <= budget   and   degree(mu) <= degree,

with weight(mu) = sum of |mode index| over the monomial, plus a standalone
certified-weight bound (see Guarantee).  The soundness argument rests on the
balance invariant sigma(mu) = -sum(s) (mode-index sum opposite the slot
sum), which pins every contributor of a certified cell inside the certified
region of its inputs.  Brackets cost one degree and cap the budget at the
operands' certified weight; kernel and delta expansions halve the certified
weight; products and linear maps preserve everything.

Returned series share structure: treat them as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

from .scalar import ONE, ZERO, PoleError, Scalar

Monomial = tuple[int, ...]  # sorted mode indices, each nonzero

CHECK_BALANCE = True


def mono_weight(m: Monomial) -> int:
    return sum(abs(n) for n in m)


def mono_sigma(m: Monomial) -> int:
    return sum(m)


# #### mode polynomials ########################################################


class AlphaPoly:
    """Polynomial in the modes with Fraction coefficients.

    Keys are sorted tuples of nonzero mode indices; values are exact
    rationals.  Zero coefficients are never stored.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Scalar] | None = None):
        self.terms = terms if terms is not None else {}

    @classmethod
    def zero(cls) -> "AlphaPoly":
        return cls({})

    @classmethod
    def const(cls, c: Scalar) -> "AlphaPoly":
        c = Fraction(c)
        return cls({(): c} if c else {})

    @classmethod
    def one(cls) -> "AlphaPoly":
        return cls({(): ONE})

    @classmethod
    def gen(cls, n: int) -> "AlphaPoly":
        if n == 0:
            raise ValueError("mode index must be nonzero")
        return cls({(n,): ONE})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, AlphaPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == AlphaPoly.const(other).terms
        return NotImplemented

    def __add__(self, other: "AlphaPoly") -> "AlphaPoly":
        if not isinstance(other, AlphaPoly):
            return NotImplemented
        a, b = self.terms, other.terms
        if len(a) < len(b):
            a, b = b, a
        out = dict(a)
        for m, c in b.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return AlphaPoly(out)

    def __neg__(self) -> "AlphaPoly":
        return AlphaPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "AlphaPoly") -> "AlphaPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, AlphaPoly):
            return poly_mul(self, other)
        if isinstance(other, (int, Fraction)):
            if not other:
                return AlphaPoly.zero()
            return AlphaPoly({m: c * other for m, c in self.terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def diff(self, n: int) -> "AlphaPoly":
        """Formal partial derivative with respect to alpha_n."""
        out = {}
        for m, c in self.terms.items():
            k = m.count(n)
            if not k:
                continue
            i = m.index(n)
            red = m[:i] + m[i + 1:]
            v = out.get(red)
            v = c * k if v is None else v + c * k
            if v:
                out[red] = v
            else:
                out.pop(red, None)
        return AlphaPoly(out)

    def modes_present(self) -> set[int]:
        s: set[int] = set()
        for m in self.terms:
            s.update(m)
        return s

    def pruned(self, max_weight: int, max_deg: int) -> "AlphaPoly":
        out = {
            m: c
            for m, c in self.terms.items()
            if len(m) <= max_deg and mono_weight(m) <= max_weight
        }
        return AlphaPoly(out) if len(out) != len(self.terms) else self

    def evaluate(self, values) -> Scalar:
        """Substitute numeric mode values (missing modes read as zero)."""
        total = None
        for m, c in self.terms.items():
            v = c
            for n in m:
                x = values.get(n)
                if not x:
                    v = None
                    break
                v = v * x
            if v is None:
                continue
            total = v if total is None else total + v
        return total if total is not None else ZERO

    def max_coeff_abs(self) -> Scalar:
        return max((abs(c) for c in self.terms.values()), default=ZERO)

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for m, c in self.sorted_terms():
            mono = "*".join(f"a[{n}]" for n in m) or "1"
            bits.append(f"({c})*{mono}")
        return " + ".join(bits)


def poly_mul(
    a: AlphaPoly,
    b: AlphaPoly,
    max_weight: int | None = None,
    max_deg: int | None = None,
) -> AlphaPoly:
    """Product with optional weight/degree caps applied to result monomials.

    Pairs are scanned with the second factor sorted by weight so a cap
    violation breaks the inner loop early.
    """
    if not a.terms or not b.terms:
        return AlphaPoly.zero()
    out: dict[Monomial, Scalar] = {}
    if max_weight is None and max_deg is None:
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = tuple(sorted(m1 + m2))
                v = out.get(m)
                v = c1 * c2 if v is None else v + c1 * c2
                if v:
                    out[m] = v
                else:
                    del out[m]
        return AlphaPoly(out)
    wcap = float("inf") if max_weight is None else max_weight
    dcap = float("inf") if max_deg is None else max_deg
    bs = sorted(b.terms.items(), key=lambda kv: mono_weight(kv[0]))
    bw = [mono_weight(m) for m, _ in bs]
    for m1, c1 in a.terms.items():
        w1 = mono_weight(m1)
        d1 = len(m1)
        if w1 > wcap or d1 > dcap:
            continue
        for (m2, c2), w2 in zip(bs, bw):
            if w1 + w2 > wcap:
                break
            if d1 + len(m2) > dcap:
                continue
            m = tuple(sorted(m1 + m2))
            v = out.get(m)
            v = c1 * c2 if v is None else v + c1 * c2
            if v:
                out[m] = v
            else:
                del out[m]
    return AlphaPoly(out)


# #### context and guarantees ##################################################


@dataclass(frozen=True)
class ModeTrunc:
    n_modes: int
    d_deg: int

    def __post_init__(self):
        if self.n_modes < 1 or self.d_deg < 1:
            raise ValueError("truncation must allow at least one mode and degree")


@dataclass(frozen=True)
class ModeContext:
    """Deformation parameters plus the working truncation."""

    s: Scalar
    eps: Scalar
    trunc: ModeTrunc

    def __post_init__(self):
        if self.s in (0, 1, -1):
            raise ValueError("s must avoid 0 and +-1")
        if self.eps == 0:
            raise ValueError("eps must be nonzero")

    @property
    def q(self) -> Scalar:
        return self.s * self.s

    def qpow(self, k: int) -> Scalar:
        return self.q**k

    def one_minus_q(self, n: int) -> Scalar:
        v = 1 - self.q**n
        if v == 0:
            raise PoleError(f"1 - q**{n} vanishes")
        return v


@dataclass(frozen=True)
class Guarantee:
    """Certified region of a truncated series.

    A cell (slot vector s, monomial mu) is certified exact when

        sum|s_i| + weight(mu) <= budget,  weight(mu) <= weight,  deg(mu) <= degree.

    Products and linear maps meet componentwise.  A bracket caps its budget
    by both operands' weight field (a contributor monomial can absorb the
    whole target weight plus slot span on one side) and costs one degree.
    Kernel and delta expansions halve the certified weight: their
    contributing cells sit at slot span up to the full monomial weight.
    """

    budget: int
    weight: int
    degree: int

    def meet(self, other: "Guarantee") -> "Guarantee":
        return Guarantee(
            min(self.budget, other.budget),
            min(self.weight, other.weight),
            min(self.degree, other.degree),
        )

    def after_bracket(self, other: "Guarantee") -> "Guarantee":
        b = min(self.budget, other.budget, self.weight, other.weight)
        return Guarantee(b, b, min(self.degree, other.degree) - 1)

    def kern_derate(self) -> "Guarantee":
        return Guarantee(self.budget, min(self.weight, self.budget // 2), self.degree)

    def covers(self, slot_abs: int, weight: int, degree: int) -> bool:
        return (
            slot_abs + weight <= self.budget
            and weight <= self.weight
            and degree <= self.degree
        )


EMPTY_GUARANTEE = Guarantee(-1, -1, -1)


# #### slotted series over the mode algebra ###################################


class AlphaSeries:
    """Laurent data in zero or more formal variables with AlphaPoly cells.

    coeffs maps slot vectors (one integer exponent per variable, each within
    +-n_modes) to mode polynomials.  Cells violating the global pruning rule
    (slot l1-norm + weight > n_modes, or degree > d_deg) are discarded on
    construction; the Guarantee says which surviving cells are certified.
    """

    __slots__ = ("ctx", "vars", "coeffs", "guar")

    def __init__(self, ctx: ModeContext, vars, coeffs, guar: Guarantee):
        self.ctx = ctx
        self.vars = tuple(vars)
        N = ctx.trunc.n_modes
        D = ctx.trunc.d_deg
        clean: dict[tuple[int, ...], AlphaPoly] = {}
        for slot, poly in coeffs.items():
            slot = tuple(slot)
            if len(slot) != len(self.vars):
                raise ValueError("slot arity mismatch")
            span = sum(abs(x) for x in slot)
            if span > N:
                continue
            p = poly.pruned(N - span, D)
            if p.terms:
                clean[slot] = p
        self.coeffs = clean
        self.guar = guar
        if CHECK_BALANCE:
            for slot, poly in clean.items():
                off = sum(slot)
                for m in poly.terms:
                    if mono_sigma(m) != -off:
                        raise AssertionError(
                            f"balance violated at slot {slot}: monomial {m}"
                        )

    # -- constructors --------------------------------------------------------

    @classmethod
    def functional(cls, ctx, poly: AlphaPoly, guar: Guarantee | None = None):
        if guar is None:
            guar = Guarantee(ctx.trunc.n_modes, ctx.trunc.n_modes, ctx.trunc.d_deg)
        return cls(ctx, (), {(): poly}, guar)

    @classmethod
    def zero(cls, ctx, vars=()):
        return cls(ctx, vars, {}, Guarantee(ctx.trunc.n_modes, ctx.trunc.n_modes, ctx.trunc.d_deg))

    # -- access ----------------------------------------------------------------

    def coeff(self, slot) -> AlphaPoly:
        return self.coeffs.get(tuple(slot), AlphaPoly.zero())

    def mode(self, n: int) -> AlphaPoly:
        """For a one-variable series sum_n c_n z**{-n}: the coefficient c_n."""
        if len(self.vars) != 1:
            raise ValueError("mode() needs exactly one variable")
        return self.coeff((-n,))

    def functional_value(self) -> AlphaPoly:
        if self.vars:
            raise ValueError("not a functional (has variables)")
        return self.coeff(())

    def is_zero(self) -> bool:
        return not self.coeffs

    def __repr__(self):
        return (
            f"<alpha-series vars={self.vars} cells={len(self.coeffs)} "
            f"guar=({self.guar.budget},{self.guar.weight},{self.guar.degree})>"
        )

    # -- linear structure -------------------------------------------------------

    def _with(self, coeffs, guar=None):
        return AlphaSeries(self.ctx, self.vars, coeffs, guar or self.guar)

    def __add__(self, other: "AlphaSeries") -> "AlphaSeries":
        self._align(other)
        out = dict(self.coeffs)
        for slot, p in other.coeffs.items():
            q = out.get(slot)
            r = p if q is None else q + p
            if r.terms:
                out[slot] = r
            else:
                out.pop(slot, None)
        return self._with(out, self.guar.meet(other.guar))

    def __neg__(self):
        return self._with({s: -p for s, p in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Scalar) -> "AlphaSeries":
        c = Fraction(c)
        if not c:
            return self._with({})
        return self._with({s: p * c for s, p in self.coeffs.items()})

    def subs_scale(self, c: Scalar, var: int = 0) -> "AlphaSeries":
        """Substitute variable var -> c * variable: cell at slot k gains c**k."""
        if not self.vars:
            raise ValueError("no variables to rescale")
        out = {}
        for slot, p in self.coeffs.items():
            out[slot] = p * (Fraction(c) ** slot[var])
        return self._with(out)

    def slice_sign(self, sign: int, var: int = 0) -> "AlphaSeries":
        """Keep only cells whose slot in the given variable has strict sign."""
        if sign not in (1, -1):
            raise ValueError("sign must be +-1")
        out = {s: p for s, p in self.coeffs.items() if sign * s[var] > 0}
        return self._with(out)

    def _align(self, other: "AlphaSeries"):
        if not isinstance(other, AlphaSeries):
            raise TypeError("AlphaSeries expected")
        if self.ctx is not other.ctx and self.ctx != other.ctx:
            raise ValueError("context mismatch")
        if self.vars != other.vars:
            raise ValueError("variable mismatch")

    # -- multiplicative structure ------------------------------------------------

    def __mul__(self, other: "AlphaSeries") -> "AlphaSeries":
        """Product: same variables convolve slotwise; disjoint variables tensor.

        Convolving in two or more shared variables certifies nothing: the
        contributor-pinning argument needs per-variable balance, which only
        one-variable operands and tensor products guarantee.
        """
        if not isinstance(other, AlphaSeries):
            return NotImplemented
        guar = self.guar.meet(other.guar)
        if self.vars == other.vars:
            rvars = self.vars
            combine = lambda a, b: tuple(x + y for x, y in zip(a, b))
            if len(self.vars) >= 2:
                guar = EMPTY_GUARANTEE
        elif not set(self.vars) & set(other.vars):
            rvars = self.vars + other.vars
            combine = lambda a, b: a + b
        else:
            raise ValueError("overlapping but unequal variables")
        N = self.ctx.trunc.n_modes
        D = self.ctx.trunc.d_deg
        out: dict[tuple[int, ...], AlphaPoly] = {}
        for sa, pa in self.coeffs.items():
            for sb, pb in other.coeffs.items():
                slot = combine(sa, sb)
                span = sum(abs(x) for x in slot)
                if span > N:
                    continue
                prod = poly_mul(pa, pb, N - span, D)
                if not prod.terms:
                    continue
                cur = out.get(slot)
                r = prod if cur is None else cur + prod
                if r.terms:
                    out[slot] = r
                else:
                    out.pop(slot, None)
        return AlphaSeries(self.ctx, rvars, out, guar)

    # -- one-sided analytic operations -------------------------------------------

    def _direction(self, what: str) -> int:
        if len(self.vars) != 1:
            raise ValueError(f"{what} needs exactly one variable")
        signs = {1 if s[0] > 0 else -1 for s in self.coeffs if s[0] != 0}
        if len(signs) > 1:
            raise ValueError(f"{what} needs one-sided support")
        return signs.pop() if signs else 1

    def exp(self) -> "AlphaSeries":
        if self.coeff((0,)).terms:
            raise ValueError("exp needs zero constant cell")
        d = self._direction("exp")
        N = self.ctx.trunc.n_modes
        one = AlphaSeries(self.ctx, self.vars, {(0,): AlphaPoly.one()}, self.guar)
        result, term = one, one
        for k in range(1, N + 1):
            term = (term * self).scale(Fraction(1, k))
            if term.is_zero():
                break
            result = result + term
        return result._with(result.coeffs, self.guar)

    def log(self) -> "AlphaSeries":
        if self.coeff((0,)) != AlphaPoly.one():
            raise ValueError("log needs unit constant cell")
        u = self - AlphaSeries(self.ctx, self.vars, {(0,): AlphaPoly.one()}, self.guar)
        if u.is_zero():
            return self._with({})
        u._direction("log")
        N = self.ctx.trunc.n_modes
        result = self._with({})
        term = AlphaSeries(self.ctx, self.vars, {(0,): AlphaPoly.one()}, self.guar)
        for k in range(1, N + 1):
            term = term * u
            if term.is_zero():
                break
            result = result + term.scale(Fraction(1 if k % 2 else -1, k))
        return result._with(result.coeffs, self.guar)

    def inv(self) -> "AlphaSeries":
        if self.coeff((0,)) != AlphaPoly.one():
            raise ValueError("inv needs unit constant cell")
        d = self._direction("inv")
        N = self.ctx.trunc.n_modes
        D = self.ctx.trunc.d_deg
        out = {(0,): AlphaPoly.one()}
        for k in range(1, N + 1):
            acc = AlphaPoly.zero()
            for j in range(1, k + 1):
                fj = self.coeffs.get((d * j,))
                gk = out.get((d * (k - j),))
                if fj is None or gk is None:
                    continue
                acc = acc + poly_mul(fj, gk, N - k, D)
            if acc.terms:
                out[(d * k,)] = -acc
        return self._with(out)


# #### bracket and flows #######################################################


def poisson_poly(
    fp: AlphaPoly,
    gp: AlphaPoly,
    ctx: ModeContext,
    max_weight: int,
    max_deg: int,
) -> AlphaPoly:
    """Bracket of two mode polynomials under the deformed pairing."""
    fmodes = fp.modes_present()
    gmodes = gp.modes_present()
    acc = AlphaPoly.zero()
    for n in range(1, ctx.trunc.n_modes + 1):
        c = ctx.one_minus_q(n)
        if n in fmodes and -n in gmodes:
            t = poly_mul(fp.diff(n), gp.diff(-n), max_weight, max_deg)
            if t.terms:
                acc = acc + t * c
        if -n in fmodes and n in gmodes:
            t = poly_mul(fp.diff(-n), gp.diff(n), max_weight, max_deg)
            if t.terms:
                acc = acc - t * c
    return acc


def bracket(F: AlphaSeries, G: AlphaSeries) -> AlphaSeries:
    """Slotwise Poisson bracket; result variables are F's then G's.

    Shared variable names are not allowed: bracket both sides in distinct
    formal variables, then specialize.
    """
    if set(F.vars) & set(G.vars):
        raise ValueError("bracket operands must use distinct variables")
    ctx = F.ctx
    N = ctx.trunc.n_modes
    D = ctx.trunc.d_deg
    rvars = F.vars + G.vars

    # per-cell derivative tables, computed once
    fcells = []
    for sa, pa in F.coeffs.items():
        modes = pa.modes_present()
        dfs = {n: pa.diff(n) for n in modes}
        fcells.append((sa, modes, dfs))
    gcells = []
    for sb, pb in G.coeffs.items():
        modes = pb.modes_present()
        dgs = {n: pb.diff(n) for n in modes}
        gcells.append((sb, modes, dgs))

    out: dict[tuple[int, ...], AlphaPoly] = {}
    for sa, fmodes, dfs in fcells:
        base_a = sum(abs(x) for x in sa)
        for sb, gmodes, dgs in gcells:
            span = base_a + sum(abs(x) for x in sb)
            if span > N:
                continue
            wcap = N - span
            acc = None
            for n in range(1, N + 1):
                c = ctx.one_minus_q(n)
                if n in fmodes and -n in gmodes:
                    t = poly_mul(dfs[n], dgs[-n], wcap, D)
                    if t.terms:
                        t = t * c
                        acc = t if acc is None else acc + t
                if -n in fmodes and n in gmodes:
                    t = poly_mul(dfs[-n], dgs[n], wcap, D)
                    if t.terms:
                        t = t * (-c)
                        acc = t if acc is None else acc + t
            if acc is None or not acc.terms:
                continue
            slot = sa + sb
            cur = out.get(slot)
            r = acc if cur is None else cur + acc
            if r.terms:
                out[slot] = r
            else:
                out.pop(slot, None)
    return AlphaSeries(ctx, rvars, out, F.guar.after_bracket(G.guar))


def flow(H: AlphaSeries, F: AlphaSeries, side: str = "left") -> AlphaSeries:
    """Hamiltonian derivative of F: {H, F} for side='left', {F, H} for 'right'."""
    if H.vars:
        raise ValueError("flow Hamiltonian must be a functional")
    if side == "left":
        return bracket(H, F)
    if side == "right":
        return bracket(F, H)
    raise ValueError("side must be 'left' or 'right'")


FlowOp = tuple[AlphaSeries, str]


def hirota(ops, f: AlphaSeries, g: AlphaSeries) -> AlphaSeries:
    """Bilinear derivative: D f.g = (Df)g - f(Dg), iterated over ops.

    Each op is (Hamiltonian functional, side); f and g share one variable,
    and the result is their slotwise product after differentiation.
    """
    ops = list(ops)
    if not ops:
        return f * g
    H, side = ops[0]
    rest = ops[1:]
    return hirota(rest, flow(H, f, side), g) - hirota(rest, f, flow(H, g, side))


def hirota_affine_power(
    op: FlowOp, M: AlphaSeries, p: int, f: AlphaSeries, g: AlphaSeries
) -> AlphaSeries:
    """(D + M)**p f.g expanded binomially; valid because the flow of M under
    its own family vanishes (M is conserved along the op's flow)."""
    if M.vars:
        raise ValueError("M must be a functional")
    total = None
    mpow = AlphaSeries.functional(f.ctx, AlphaPoly.one(), M.guar)
    powers = [mpow]
    for _ in range(p):
        mpow = mpow * M
        powers.append(mpow)
    for j in range(p + 1):
        term = hirota([op] * j, f, g)
        term = powers[p - j] * term
        term = term.scale(comb(p, j))
        total = term if total is None else total + term
    return total


# #### kernel application ######################################################


def apply_ratio_kernel(
    F: AlphaSeries, terms: dict[int, Scalar], pair: tuple[int, int]
) -> AlphaSeries:
    """Multiply F by a Laurent kernel sum_l k_l (v_b / v_a)**l.

    pair gives the variable positions (a, b).  Completeness of the result's
    certified cells requires F to be a product of one-variable builds, whose
    balance pins the contributing l to |l| <= budget; callers own that
    precondition, and the kernel terms must extend at least that far.
    """
    ia, ib = pair
    N = F.ctx.trunc.n_modes
    out: dict[tuple[int, ...], AlphaPoly] = {}
    for slot, poly in F.coeffs.items():
        for l, k in terms.items():
            if not k:
                continue
            tgt = list(slot)
            tgt[ia] -= l
            tgt[ib] += l
            if abs(tgt[ia]) > N or abs(tgt[ib]) > N:
                continue
            tgt = tuple(tgt)
            add = poly * k
            cur = out.get(tgt)
            r = add if cur is None else cur + add
            if r.terms:
                out[tgt] = r
            else:
                out.pop(tgt, None)
    return AlphaSeries(F.ctx, F.vars, out, F.guar.kern_derate())


def delta_mul(c: Scalar, G: AlphaSeries, new_var: str) -> AlphaSeries:
    """Expand delta(c * w / z) * G(z) into a two-variable series in (z, w).

    delta(x) = sum over all integers of x**n; the cell at (a, b) receives
    c**b * G[a + b].  G must be a one-variable build so balance pins its
    support within the window.
    """
    if len(G.vars) != 1:
        raise ValueError("delta_mul needs a one-variable series")
    N = G.ctx.trunc.n_modes
    c = Fraction(c)
    out: dict[tuple[int, int], AlphaPoly] = {}
    for (g,), poly in G.coeffs.items():
        for b in range(-N, N + 1):
            a = g - b
            if abs(a) > N:
                continue
            add = poly * c**b
            if not add.terms:
                continue
            tgt = (a, b)
            cur = out.get(tgt)
            r = add if cur is None else cur + add
            if r.terms:
                out[tgt] = r
    return AlphaSeries(G.ctx, (G.vars[0], new_var), out, G.guar.kern_derate())


# #### field builders ##########################################################


def _linear_series(ctx: ModeContext, var: str, rows) -> AlphaSeries:
    coeffs = {}
    for slot, n, c in rows:
        if c:
            coeffs[(slot,)] = AlphaPoly({(n,): Fraction(c)})
    N = ctx.trunc.n_modes
    return AlphaSeries(ctx, (var,), coeffs, Guarantee(N, N, ctx.trunc.d_deg))


@lru_cache(maxsize=None)
def build_tau(ctx: ModeContext, sign: str, var: str = "z") -> AlphaSeries:
    """Dressing series tau_+ / tau_-: exponentials of one-sided mode sums.

    tau_+ = exp(-sum_{n>0} alpha_{-n} z**n  / (1 - q**n))
    tau_- = exp(-sum_{n>0} alpha_{n}  z**-n / (1 - q**n))
    """
    N = ctx.trunc.n_modes
    if sign == "+":
        rows = [(n, -n, -1 / ctx.one_minus_q(n)) for n in range(1, N + 1)]
    elif sign == "-":
        rows = [(-n, n, -1 / ctx.one_minus_q(n)) for n in range(1, N + 1)]
    else:
        raise ValueError("sign must be '+' or '-'")
    return _linear_series(ctx, var, rows).exp()


@lru_cache(maxsize=None)
def build_phi(ctx: ModeContext, sign: str, var: str = "z") -> AlphaSeries:
    """Log-potentials: phi_+ = sum_{n>0} alpha_{-n} z**n, phi_- = -sum alpha_n z**-n."""
    N = ctx.trunc.n_modes
    if sign == "+":
        rows = [(n, -n, ONE) for n in range(1, N + 1)]
    elif sign == "-":
        rows = [(-n, n, -ONE) for n in range(1, N + 1)]
    else:
        raise ValueError("sign must be '+' or '-'")
    return _linear_series(ctx, var, rows)


@lru_cache(maxsize=None)
def build_eta(ctx: ModeContext, var: str = "z") -> AlphaSeries:
    """Exponential field eps * exp(sum_{n != 0} alpha_n z**-n).

    Split into up/down one-sided exponentials and multiplied, which equals
    the two-sided exponential since the summands commute.
    """
    N = ctx.trunc.n_modes
    up = _linear_series(ctx, var, [(n, -n, ONE) for n in range(1, N + 1)])
    dn = _linear_series(ctx, var, [(-n, n, ONE) for n in range(1, N + 1)])
    return (up.exp() * dn.exp()).scale(ctx.eps)


@lru_cache(maxsize=None)
def build_xi(ctx: ModeContext, var: str = "z") -> AlphaSeries:
    """Dual exponential field: (1/eps) * exp(-sum_{n != 0} alpha_n s**-|n| z**-n)."""
    N = ctx.trunc.n_modes
    up = _linear_series(
        ctx, var, [(n, -n, -(ONE / ctx.s**n)) for n in range(1, N + 1)]
    )
    dn = _linear_series(
        ctx, var, [(-n, n, -(ONE / ctx.s**n)) for n in range(1, N + 1)]
    )
    return (up.exp() * dn.exp()).scale(1 / ctx.eps)


@lru_cache(maxsize=None)
def build_eta_ratio(ctx: ModeContext, var: str = "z") -> AlphaSeries:
    """The same field as build_eta via the dressing-series ratio
    eps * tau_-(z/q) tau_+(zq) / (tau_-(z) tau_+(z))."""
    tp = build_tau(ctx, "+", var)
    tm = build_tau(ctx, "-", var)
    num = tm.subs_scale(1 / ctx.q) * tp.subs_scale(ctx.q)
    return (num * tm.inv() * tp.inv()).scale(ctx.eps)


@lru_cache(maxsize=None)
def build_xi_ratio(ctx: ModeContext, var: str = "z") -> AlphaSeries:
    """Dual field via the ratio
    (1/eps) tau_-(z s) tau_+(z/s) / (tau_-(z/s) tau_+(z s))."""
    tp = build_tau(ctx, "+", var)
    tm = build_tau(ctx, "-", var)
    num = tm.subs_scale(ctx.s) * tp.subs_scale(1 / ctx.s)
    den_inv = tm.subs_scale(1 / ctx.s).inv() * tp.subs_scale(ctx.s).inv()
    return (num * den_inv).scale(1 / ctx.eps)


@lru_cache(maxsize=None)
def eta_zero(ctx: ModeContext) -> AlphaSeries:
    """Zero mode of the exponential field, as a flow Hamiltonian."""
    e = build_eta(ctx)
    return AlphaSeries.functional(ctx, e.mode(0), e.guar)


@lru_cache(maxsize=None)
def xi_zero(ctx: ModeContext) -> AlphaSeries:
    """Zero mode of the dual field, generating the second flow direction."""
    x = build_xi(ctx)
    return AlphaSeries.functional(ctx, x.mode(0), x.guar)
