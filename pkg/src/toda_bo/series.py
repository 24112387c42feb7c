"""Windowed Laurent series over a generic coefficient ring.

A series stores coefficients only inside a finite window [lo, hi]; degrees
outside the window are *unknown*, not zero, unless the corresponding tight
flag says the exact object has no support there.  Every operation computes
the largest window on which its result is provably exact given the input
windows, so "exact within window" is an invariant, never a hope.

Coefficients may be any commutative-ring values supporting +, -, * and
equality with the ring zero (Fractions and mode polynomials both qualify);
the ring zero is carried explicitly by each series.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .scalar import ONE, ZERO, BudgetError, Scalar

_INF = float("inf")

MAX_MULTI_VARS = 4


class LaurentSeries:
    __slots__ = ("var", "lo", "hi", "coeffs", "zero", "tight_lo", "tight_hi")

    def __init__(self, var, lo, hi, coeffs, zero=ZERO, tight_lo=False, tight_hi=False):
        if lo > hi:
            raise ValueError("empty window")
        bad = [d for d in coeffs if d < lo or d > hi]
        if bad:
            raise ValueError(f"coefficient outside window: {bad[0]}")
        self.var = var
        self.lo = lo
        self.hi = hi
        self.coeffs = {d: c for d, c in coeffs.items() if c != zero}
        self.zero = zero
        self.tight_lo = tight_lo
        self.tight_hi = tight_hi

    # -- construction helpers ------------------------------------------------

    @classmethod
    def poly(cls, var, coeffs, zero=ZERO):
        """Exact Laurent polynomial: support fully known, both sides tight."""
        nz = {d: c for d, c in coeffs.items() if c != zero}
        if nz:
            lo, hi = min(nz), max(nz)
        else:
            lo = hi = 0
        return cls(var, lo, hi, nz, zero, tight_lo=True, tight_hi=True)

    @classmethod
    def constant(cls, var, value, zero=ZERO):
        return cls.poly(var, {0: value}, zero)

    def copy_with(self, coeffs, lo=None, hi=None, tight_lo=None, tight_hi=None):
        return LaurentSeries(
            self.var,
            self.lo if lo is None else lo,
            self.hi if hi is None else hi,
            coeffs,
            self.zero,
            self.tight_lo if tight_lo is None else tight_lo,
            self.tight_hi if tight_hi is None else tight_hi,
        )

    # -- inspection ----------------------------------------------------------

    def coeff(self, d):
        """Coefficient at degree d; degrees outside the known range raise."""
        if self.lo <= d <= self.hi:
            return self.coeffs.get(d, self.zero)
        if d < self.lo and self.tight_lo:
            return self.zero
        if d > self.hi and self.tight_hi:
            return self.zero
        raise IndexError(f"degree {d} outside guaranteed window [{self.lo},{self.hi}]")

    def _pot_lo(self):
        """Lowest degree at which the exact object may have support."""
        if not self.tight_lo:
            return -_INF
        if self.coeffs:
            return min(self.coeffs)
        return self.hi + 1 if not self.tight_hi else _INF

    def _pot_hi(self):
        if not self.tight_hi:
            return _INF
        if self.coeffs:
            return max(self.coeffs)
        return self.lo - 1 if not self.tight_lo else -_INF

    def is_zero(self):
        return not self.coeffs

    def dump(self) -> str:
        lines = [f"{self.var}^{d}: {self.coeffs[d]}" for d in sorted(self.coeffs)]
        return "\n".join(lines) or "0"

    def __repr__(self):
        flags = ("[" if self.tight_lo else "(") + (")" if not self.tight_hi else "]")
        return f"<series {self.var} {self.lo}..{self.hi} {flags} {len(self.coeffs)} terms>"

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (
            self.var == other.var
            and self.lo == other.lo
            and self.hi == other.hi
            and self.tight_lo == other.tight_lo
            and self.tight_hi == other.tight_hi
            and self.coeffs == other.coeffs
        )

    def agrees_with(self, other) -> bool:
        """Coefficientwise equality on the intersection of known ranges."""
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return all(self.coeff(d) == other.coeff(d) for d in range(lo, hi + 1))

    # -- ring operations -----------------------------------------------------

    def __neg__(self):
        return self.copy_with({d: -c for d, c in self.coeffs.items()})

    def scale(self, c):
        return self.copy_with({d: v * c for d, v in self.coeffs.items()})

    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        f, g = self, other
        if f.var != g.var:
            raise ValueError("variable mismatch")
        klo = max(
            f.lo if not f.tight_lo else -_INF,
            g.lo if not g.tight_lo else -_INF,
        )
        khi = min(
            f.hi if not f.tight_hi else _INF,
            g.hi if not g.tight_hi else _INF,
        )
        rlo = int(max(klo, min(f.lo, g.lo)))
        rhi = int(min(khi, max(f.hi, g.hi)))
        if rlo > rhi:
            raise ValueError("window collapse in add")
        out = {}
        for d in range(rlo, rhi + 1):
            v = f.coeff(d) + g.coeff(d)
            if v != f.zero:
                out[d] = v
        return LaurentSeries(
            f.var, rlo, rhi, out, f.zero,
            tight_lo=f.tight_lo and g.tight_lo,
            tight_hi=f.tight_hi and g.tight_hi,
        )

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return series_mul(self, other)

    def shift_arg(self, c: Scalar):
        """Substitute var -> c * var: coefficient at degree d picks up c**d."""
        return self.copy_with({d: v * c**d for d, v in self.coeffs.items()})


def series_mul(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    """Product, keeping exactly the provably complete degrees.

    Degree k survives only if every split k = d1 + d2 with d1 in f's
    potential support and d2 in g's potential support uses stored (or
    provably absent) coefficients on both sides.
    """
    if f.var != g.var:
        raise ValueError("variable mismatch")
    plo_f, phi_f = f._pot_lo(), f._pot_hi()
    plo_g, phi_g = g._pot_lo(), g._pot_hi()
    if plo_f > phi_f or plo_g > phi_g:
        # one factor is the exact zero function
        return LaurentSeries(f.var, 0, 0, {}, f.zero, tight_lo=True, tight_hi=True)

    khi = min(
        _INF if f.tight_hi else f.hi + plo_g,
        _INF if g.tight_hi else g.hi + plo_f,
    )
    klo = max(
        -_INF if f.tight_lo else f.lo + phi_g,
        -_INF if g.tight_lo else g.lo + phi_f,
    )
    new_plo = plo_f + plo_g
    new_phi = phi_f + phi_g
    rlo = max(klo, new_plo)
    rhi = min(khi, new_phi)
    if rlo > rhi or rlo == -_INF or rhi == _INF:
        raise ValueError("window collapse in mul")
    rlo, rhi = int(rlo), int(rhi)
    out = {}
    for d1, c1 in f.coeffs.items():
        for d2, c2 in g.coeffs.items():
            d = d1 + d2
            if rlo <= d <= rhi:
                v = out.get(d)
                out[d] = c1 * c2 if v is None else v + c1 * c2
    return LaurentSeries(
        f.var, rlo, rhi, out, f.zero,
        tight_lo=klo <= new_plo,
        tight_hi=khi >= new_phi,
    )


def _onesided_direction(f: LaurentSeries, kind: str) -> int:
    """+1 for a power series in var, -1 for one in 1/var; raise otherwise."""
    if f.tight_lo and f._pot_lo() >= 0:
        return 1
    if f.tight_hi and f._pot_hi() <= 0:
        return -1
    raise ValueError(f"{kind} needs one-sided support touching degree 0")


def _resolve_order(f: LaurentSeries, d: int, order: int | None, what: str) -> int:
    """Largest one-sided order the input data supports, or validate a request."""
    natural = f.hi if d > 0 else -f.lo
    if order is None:
        return natural
    if order > natural and not (f.tight_hi if d > 0 else f.tight_lo):
        raise ValueError(f"{what}: order {order} exceeds known data ({natural})")
    return order


def series_inv(f: LaurentSeries, one=ONE, order: int | None = None) -> LaurentSeries:
    """Inverse of a one-sided series with unit constant term.

    Exact to the input's one-sided order (or to a larger requested order when
    the input is an exact polynomial); the far side of the result window is
    open, inverses being generically infinite.
    """
    if f.coeff(0) != one:
        raise ValueError("constant term must be one (normalize first)")
    d = _onesided_direction(f, "series_inv")
    order = _resolve_order(f, d, order, "series_inv")
    out = {0: one}
    for k in range(1, order + 1):
        acc = None
        for j in range(1, k + 1):
            c = f.coeffs.get(d * j)
            if c is None or (d * (k - j)) not in out:
                continue
            t = c * out[d * (k - j)]
            acc = t if acc is None else acc + t
        if acc is not None and acc != f.zero:
            out[d * k] = -acc
    out = {k: v for k, v in out.items() if v != f.zero or k == 0}
    lo, hi = (0, order) if d > 0 else (-order, 0)
    return LaurentSeries(
        f.var, lo, hi, out, f.zero,
        tight_lo=d > 0, tight_hi=d < 0,
    )


def series_exp(f: LaurentSeries, one=ONE, order: int | None = None) -> LaurentSeries:
    """exp of a one-sided series with zero constant term, exact to its order."""
    if f.coeff(0) != f.zero:
        raise ValueError("exp needs zero constant term")
    if f.is_zero():
        return LaurentSeries(f.var, 0, 0, {0: one}, f.zero, True, True)
    d = _onesided_direction(f, "series_exp")
    order = _resolve_order(f, d, order, "series_exp")
    lo, hi = (0, order) if d > 0 else (-order, 0)
    result = LaurentSeries(f.var, lo, hi, {0: one}, f.zero, d > 0, d < 0)
    term = LaurentSeries(f.var, lo, hi, {0: one}, f.zero, d > 0, d < 0)
    for k in range(1, order + 1):
        term = _truncated_mul(term, f, lo, hi).scale(Fraction(1, k))
        if term.is_zero():
            break
        result = result + term
    return result


def series_log(f: LaurentSeries, one=ONE, order: int | None = None) -> LaurentSeries:
    """log of a one-sided series with unit constant term, exact to its order."""
    if f.coeff(0) != one:
        raise ValueError("log needs unit constant term")
    u = f - LaurentSeries(f.var, 0, 0, {0: one}, f.zero, True, True)
    if u.is_zero():
        return LaurentSeries(f.var, 0, 0, {}, f.zero, True, True)
    d = _onesided_direction(u, "series_log")
    order = _resolve_order(u, d, order, "series_log")
    lo, hi = (0, order) if d > 0 else (-order, 0)
    result = LaurentSeries(f.var, lo, hi, {}, f.zero, d > 0, d < 0)
    term = LaurentSeries(f.var, lo, hi, {0: one}, f.zero, d > 0, d < 0)
    for k in range(1, order + 1):
        term = _truncated_mul(term, u, lo, hi)
        if term.is_zero():
            break
        signed = term.scale(Fraction(1 if k % 2 else -1, k))
        result = result + signed
    return result


def _truncated_mul(f: LaurentSeries, g: LaurentSeries, lo: int, hi: int) -> LaurentSeries:
    """One-sided product clipped to [lo, hi]; callers guarantee exactness."""
    out = {}
    for d1, c1 in f.coeffs.items():
        for d2, c2 in g.coeffs.items():
            d = d1 + d2
            if lo <= d <= hi:
                v = out.get(d)
                out[d] = c1 * c2 if v is None else v + c1 * c2
    return LaurentSeries(f.var, lo, hi, out, f.zero, f.tight_lo, f.tight_hi)


class MultiSeries:
    """Sparse several-variable Laurent data on a symmetric per-variable window.

    Unlike LaurentSeries this carries no exactness bookkeeping: products
    simply drop exponents outside the window.  It exists for kernel
    manipulation and convergent (numerically truncated) evaluations, where
    the caller owns the truncation-error argument.
    """

    __slots__ = ("vars", "window", "coeffs", "zero")

    def __init__(self, vars, window, coeffs, zero=ZERO):
        vars = tuple(vars)
        if len(vars) > MAX_MULTI_VARS:
            raise BudgetError(f"too many variables: {len(vars)} > {MAX_MULTI_VARS}")
        if window < 0:
            raise ValueError("window must be >= 0")
        for exps in coeffs:
            if len(exps) != len(vars):
                raise ValueError("exponent arity mismatch")
            if any(abs(e) > window for e in exps):
                raise ValueError("exponent outside window")
        self.vars = vars
        self.window = window
        self.coeffs = {e: c for e, c in coeffs.items() if c != zero}
        self.zero = zero

    @classmethod
    def constant(cls, vars, window, value, zero=ZERO):
        return cls(vars, window, {(0,) * len(tuple(vars)): value}, zero)

    def coeff(self, exps):
        return self.coeffs.get(tuple(exps), self.zero)

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            v = out.get(e)
            v = c if v is None else v + c
            if v == self.zero:
                out.pop(e, None)
            else:
                out[e] = v
        return MultiSeries(self.vars, self.window, out, self.zero)

    def __neg__(self):
        return MultiSeries(
            self.vars, self.window, {e: -c for e, c in self.coeffs.items()}, self.zero
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return MultiSeries(
            self.vars, self.window, {e: v * c for e, v in self.coeffs.items()}, self.zero
        )

    def __mul__(self, other):
        self._check(other)
        w = self.window
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if any(abs(x) > w for x in e):
                    continue
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return MultiSeries(self.vars, w, out, self.zero)

    def _check(self, other):
        if not isinstance(other, MultiSeries):
            raise TypeError("MultiSeries expected")
        if self.vars != other.vars or self.window != other.window:
            raise ValueError("vars/window mismatch")

    def dump(self) -> str:
        lines = []
        for e in sorted(self.coeffs):
            mono = " ".join(f"{v}^{x}" for v, x in zip(self.vars, e) if x)
            lines.append(f"{mono or '1'}: {self.coeffs[e]}")
        return "\n".join(lines) or "0"


def constant_term(ms: MultiSeries):
    """The coefficient of the all-zeros exponent vector."""
    return ms.coeff((0,) * len(ms.vars))


def kernel_series(kind: str, i: str, j: str, N: int, q: Scalar) -> MultiSeries:
    """Interaction kernel in the ratio w_j/w_i, truncated at order N.

    kind='plus':  1 + (1 - 1/q) * sum_{m=1..N} (q   w_j/w_i)**m
    kind='minus': 1 + (1 - q)   * sum_{m=1..N} (w_j/(q w_i))**m
    The minus kind is the plus kind with q -> 1/q.
    """
    if i == j:
        raise ValueError("kernel needs two distinct variables")
    if kind == "plus":
        qq = q
    elif kind == "minus":
        qq = 1 / q
    else:
        raise ValueError(f"unknown kernel kind: {kind}")
    coeffs = {(0, 0): ONE}
    lead = ONE - 1 / qq
    for m in range(1, N + 1):
        coeffs[(-m, m)] = lead * qq**m
    return MultiSeries((i, j), N, coeffs, ZERO)


def ratio_kernel_terms(kind: str, N: int, q: Scalar) -> dict[int, Scalar]:
    """The same kernels as flat maps m -> coefficient of (w_j/w_i)**m."""
    ms = kernel_series(kind, "i", "j", N, q)
    return {m: c for (mi, m), c in ms.coeffs.items()}
