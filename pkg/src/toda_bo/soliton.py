"""Exact multi-soliton dressing data.

A soliton tau object is a finite sum of terms c * z**p * prod_k b_k**e_k
with exact rational c and integer exponents; the amplitudes b_k stay formal,
so identities can be checked as polynomial identities in the b's.  The plus
and minus objects are indexed by subsets of the n wave numbers a_k, with
pairwise interaction coefficients and (on the minus side) reflection
factors evaluated at beta = q**n * eps.

Time dependence enters through the amplitudes: the flow of order i scales
b_k by exp((1 - q**i) t_i a_k**i) (barred flows use inverted weights), so
every term is a joint eigenvector of all flows.  Bilinear derivatives
therefore reduce to per-term-pair eigenvalue arithmetic, and finite shift
operations multiply each b_k by an explicit rational factor.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .scalar import ONE, ParamPoint, PoleError, Scalar, parse_scalar
from .series import LaurentSeries, series_inv

Symbolic = dict[tuple[int, tuple[int, ...]], Scalar]


@dataclass(frozen=True)
class SolitonTerm:
    z_power: int
    b_exp: tuple[int, ...]
    coeff: Scalar


@dataclass(frozen=True)
class SolitonTau:
    sign: str
    params: ParamPoint
    terms: tuple[SolitonTerm, ...]

    def scale(self, c: Scalar) -> "SolitonTau":
        return SolitonTau(
            self.sign,
            self.params,
            tuple(
                SolitonTerm(t.z_power, t.b_exp, t.coeff * c) for t in self.terms
            ),
        )

    def subs_scale(self, c: Scalar) -> "SolitonTau":
        """Substitute z -> c * z."""
        return SolitonTau(
            self.sign,
            self.params,
            tuple(
                SolitonTerm(t.z_power, t.b_exp, t.coeff * Fraction(c) ** t.z_power)
                for t in self.terms
            ),
        )

    def symbolic(self) -> Symbolic:
        out: Symbolic = {}
        for t in self.terms:
            k = (t.z_power, t.b_exp)
            v = out.get(k)
            v = t.coeff if v is None else v + t.coeff
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return out

    def to_series(self, b_values, var: str = "z") -> LaurentSeries:
        """Evaluate the amplitudes, leaving an exact Laurent polynomial."""
        b_values = tuple(Fraction(b) for b in b_values)
        if len(b_values) != self.params.n:
            raise ValueError("amplitude count mismatch")
        if any(b == 0 for b in b_values):
            raise ValueError("amplitudes must be nonzero")
        coeffs: dict[int, Scalar] = {}
        for t in self.terms:
            v = t.coeff
            for b, e in zip(b_values, t.b_exp):
                v *= b**e
            coeffs[t.z_power] = coeffs.get(t.z_power, Fraction(0)) + v
        return LaurentSeries.poly(var, coeffs)


# #### construction ############################################################


def interaction_coeff(params: ParamPoint, subset) -> Scalar:
    """Pairwise interaction product over an index subset."""
    q = params.q
    a = params.a
    c = ONE
    for i, j in itertools.combinations(sorted(subset), 2):
        num = (a[i] - a[j]) ** 2
        den = (a[i] - q * a[j]) * (a[i] - a[j] / q)
        if den == 0:
            raise PoleError("degenerate wave numbers")
        c *= num / den
    return c


def d_factor(params: ParamPoint, k: int, beta: Scalar) -> Scalar:
    """Reflection factor attached to wave number k at spectral point beta."""
    q = params.q
    a = params.a
    if a[k] == beta or q * a[k] == beta:
        raise PoleError("beta collides with a wave number")
    val = (1 - beta / (q * a[k])) / (1 - beta / a[k])
    for j in range(params.n):
        if j == k:
            continue
        num = (a[k] - q * a[j]) * (a[k] - a[j] / q)
        den = (a[k] - a[j]) ** 2
        val *= num / den
    return val


def make_tau_plus(params: ParamPoint) -> SolitonTau:
    """Upper tau: sum over subsets I of z**|I| C_I prod_{k in I} b_k."""
    n = params.n
    terms = []
    for r in range(n + 1):
        for subset in itertools.combinations(range(n), r):
            e = tuple(1 if k in subset else 0 for k in range(n))
            terms.append(SolitonTerm(r, e, interaction_coeff(params, subset)))
    return SolitonTau("+", params, tuple(terms))


def make_tau_minus(params: ParamPoint, beta: Scalar | None = None) -> SolitonTau:
    """Lower tau: subsets weighted by reflection factors and inverse amplitudes.

    beta defaults to q**n * eps; other values arise from finite shifts of the
    upper tau (see the shift identity in the verification suite).
    """
    n = params.n
    if beta is None:
        beta = params.q**n * params.eps
    terms = []
    for r in range(n + 1):
        for subset in itertools.combinations(range(n), r):
            e = tuple(-1 if k in subset else 0 for k in range(n))
            c = interaction_coeff(params, subset)
            for k in subset:
                c *= d_factor(params, k, beta)
            terms.append(SolitonTerm(-r, e, c))
    return SolitonTau("-", params, tuple(terms))


# #### finite shifts and flows #################################################


def miwa_factor(params: ParamPoint, k: int, kind: str, amount: Scalar) -> Scalar:
    """Per-amplitude factor of a finite shift of the time variables.

    kind 't':    b_k *= (1 - q a_k amount) / (1 - a_k amount)
    kind 'tbar': b_k *= (1 - amount / (q a_k)) / (1 - amount / a_k)
    """
    q = params.q
    a = params.a[k]
    if kind == "t":
        num, den = 1 - q * a * amount, 1 - a * amount
    elif kind == "tbar":
        num, den = 1 - amount / (q * a), 1 - amount / a
    else:
        raise ValueError("kind must be 't' or 'tbar'")
    if den == 0 or num == 0:
        raise PoleError("shift amount hits a pole of the amplitude factor")
    return num / den


def miwa_shift(
    tau: SolitonTau, kind: str, amount: Scalar, direction: int = 1
) -> SolitonTau:
    """Finite shift of the time sequence by +-[amount]."""
    if direction not in (1, -1):
        raise ValueError("direction must be +-1")
    facs = [miwa_factor(tau.params, k, kind, amount) for k in range(tau.params.n)]
    if direction < 0:
        facs = [1 / f for f in facs]
    terms = []
    for t in tau.terms:
        c = t.coeff
        for f, e in zip(facs, t.b_exp):
            c *= f**e
        terms.append(SolitonTerm(t.z_power, t.b_exp, c))
    return SolitonTau(tau.sign, tau.params, tuple(terms))


def flow_eigenvalue(
    params: ParamPoint, term: SolitonTerm, kind: str, order: int
) -> Scalar:
    """Logarithmic derivative of a term along the flow of the given order."""
    q = params.q
    total = Fraction(0)
    for a, e in zip(params.a, term.b_exp):
        if not e:
            continue
        if kind == "t":
            total += e * (1 - q**order) * a**order
        elif kind == "tbar":
            total += e * (1 - q**-order) * a**-order
        else:
            raise ValueError("kind must be 't' or 'tbar'")
    return total


@dataclass(frozen=True)
class BilinearOp:
    """(D + shift)**power for the flow (kind, order), acting on a tau pair."""

    kind: str
    order: int
    shift: Scalar = Fraction(0)
    power: int = 1


def bilinear(f: SolitonTau, g: SolitonTau, ops) -> Symbolic:
    """Apply a product of affine bilinear derivative operators to f.g.

    Each term pair is a joint eigenvector: D contributes the eigenvalue
    difference, so (D + shift)**power contributes an exact scalar factor.
    """
    ops = list(ops)
    out: Symbolic = {}
    for tf in f.terms:
        for tg in g.terms:
            c = tf.coeff * tg.coeff
            for op in ops:
                lam = flow_eigenvalue(f.params, tf, op.kind, op.order)
                mu = flow_eigenvalue(g.params, tg, op.kind, op.order)
                c *= (lam - mu + op.shift) ** op.power
            if not c:
                continue
            key = (
                tf.z_power + tg.z_power,
                tuple(x + y for x, y in zip(tf.b_exp, tg.b_exp)),
            )
            v = out.get(key)
            v = c if v is None else v + c
            if v:
                out[key] = v
            else:
                del out[key]
    return out


def symbolic_sub(a: Symbolic, b: Symbolic) -> Symbolic:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k)
        w = -v if w is None else w - v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def symbolic_scale(a: Symbolic, c: Scalar) -> Symbolic:
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


# #### numeric field reconstruction ############################################


def decay_report(params: ParamPoint, b_values) -> dict:
    """Margins governing the Laurent expansion of the field on |z| = 1.

    The upper tau vanishes near |z| ~ 1/|b_k| and the lower near
    |z| ~ |d_k / b_k|; both stay off the unit circle when every |b_k| < 1
    and |d_k| < |b_k|.  Returns the factors for callers to test.
    """
    b_values = tuple(Fraction(x) for x in b_values)
    beta = params.q**params.n * params.eps
    d = [d_factor(params, k, beta) for k in range(params.n)]
    outer = max((abs(x) for x in b_values), default=Fraction(0))
    inner = max(
        (abs(dk / bk) for dk, bk in zip(d, b_values)), default=Fraction(0)
    )
    return {
        "d_factors": d,
        "outer_margin": outer,
        "inner_margin": inner,
        "ok": outer < 1 and inner < 1,
    }


def _poly_divmod(a: list, b: list) -> tuple[list, list]:
    a = a[:]
    quo = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b):
        c = a[-1] / b[-1]
        k = len(a) - len(b)
        quo[k] = c
        for i, bi in enumerate(b):
            a[k + i] -= c * bi
        while a and a[-1] == 0:
            a.pop()
    return quo, a


def _poly_bezout(f: list, g: list) -> tuple[list, list]:
    """u, v over the rationals with u*f + v*g = 1; requires coprime inputs."""

    def _comb(p0, p1, quo):
        prod = [Fraction(0)] * (len(quo) + len(p1) - 1) if quo and p1 else []
        for i, qi in enumerate(quo):
            for j, pj in enumerate(p1):
                prod[i + j] += qi * pj
        out = [Fraction(0)] * max(len(p0), len(prod))
        for i, x in enumerate(p0):
            out[i] += x
        for i, x in enumerate(prod):
            out[i] -= x
        while out and out[-1] == 0:
            out.pop()
        return out

    r0, r1 = f[:], g[:]
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        quo, rem = _poly_divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, _comb(s0, s1, quo)
        t0, t1 = t1, _comb(t0, t1, quo)
    if len(r0) != 1:
        raise PoleError("tau factors share a root; expansion annulus is empty")
    c = r0[0]
    return [x / c for x in s0], [x / c for x in t0]


def _annulus_ratio(
    num: LaurentSeries, tm: LaurentSeries, tp: LaurentSeries, window: int
) -> LaurentSeries:
    """num / (tm * tp) expanded where tm inverts downward and tp upward.

    The two inverses cannot be convolved directly, so the reciprocal is
    split as z**deg * u / tp + v / tm with u, v from the Bezout identity of
    the (coprime) polynomial forms of the two factors.
    """
    var = num.var
    n_m = -tm.lo
    f = [tm.coeff(i - n_m) for i in range(n_m + 1)]
    g = [tp.coeff(j) for j in range(tp.hi + 1)]
    u, v = _poly_bezout(f, g)
    up = LaurentSeries.poly(var, {i + n_m: c for i, c in enumerate(u) if c})
    vp = LaurentSeries.poly(var, {i: c for i, c in enumerate(v) if c})
    order = window + 2 * n_m + 2 * tp.hi + 2
    part_up = num * up * series_inv(tp, order=order)
    part_dn = num * vp * series_inv(tm, order=order)
    out = part_up + part_dn
    if out.lo > -window or out.hi < window:
        raise ValueError("window too small after inversion")
    coeffs = {d: out.coeff(d) for d in range(-window, window + 1)}
    return LaurentSeries(var, -window, window, {d: c for d, c in coeffs.items() if c})


def eta_series_from_taus(
    params: ParamPoint, b_values, window: int
) -> LaurentSeries:
    """Laurent window of eps tau_-(z/q) tau_+(zq) / (tau_-(z) tau_+(z)).

    Exact coefficients of the rational function; they are the field's modes
    whenever the decay margins are below one.
    """
    if params.n == 0:
        return LaurentSeries("z", -window, window, {0: params.eps})
    q = params.q
    tp = make_tau_plus(params).to_series(b_values)
    tm = make_tau_minus(params).to_series(b_values)
    num = tm.shift_arg(1 / q) * tp.shift_arg(q)
    return _annulus_ratio(num, tm, tp, window).scale(params.eps)


def xi_series_from_taus(
    params: ParamPoint, b_values, window: int
) -> LaurentSeries:
    """Laurent window of tau_-(zs) tau_+(z/s) / (eps tau_-(z/s) tau_+(zs))."""
    if params.n == 0:
        return LaurentSeries("z", -window, window, {0: 1 / params.eps})
    s = params.s
    tp = make_tau_plus(params).to_series(b_values)
    tm = make_tau_minus(params).to_series(b_values)
    num = tm.shift_arg(s) * tp.shift_arg(1 / s)
    den_m = tm.shift_arg(1 / s)
    den_p = tp.shift_arg(s)
    return _annulus_ratio(num, den_m, den_p, window).scale(1 / params.eps)


def modes_from_series(f: LaurentSeries, window: int) -> dict[int, Scalar]:
    """Mode map eta_n = [z**-n] f for |n| <= window."""
    return {n: f.coeff(-n) for n in range(-window, window + 1)}


def alpha_from_taus(params: ParamPoint, b_values, window: int) -> dict[int, Scalar]:
    """Recover modes alpha_{+-n} from the logarithms of the two tau series.

    alpha_{-n} = -(1 - q**n) [z**+n] log tau_+
    alpha_{+n} = -(1 - q**n) [z**-n] log tau_-
    """
    from .series import series_log

    q = params.q
    tp = make_tau_plus(params).to_series(b_values)
    tm = make_tau_minus(params).to_series(b_values)
    lp = series_log(tp, order=window)
    lm = series_log(tm, order=window)
    out: dict[int, Scalar] = {}
    for n in range(1, window + 1):
        out[-n] = -(1 - q**n) * lp.coeff(n)
        out[n] = -(1 - q**n) * lm.coeff(-n)
    return out


# #### soliton specifications ##################################################


def parse_soliton_spec(spec: dict) -> tuple[ParamPoint, tuple[Scalar, ...]]:
    """Read {"s": ..., "eps": ..., "a": [...], "b": [...]} with exact entries."""
    try:
        s = parse_scalar(spec["s"])
        eps = parse_scalar(spec["eps"])
        a = tuple(parse_scalar(x) for x in spec["a"])
        b = tuple(parse_scalar(x) for x in spec["b"])
    except KeyError as e:
        raise ValueError(f"soliton spec missing field {e}") from None
    if len(b) != len(a):
        raise ValueError("soliton spec needs one amplitude per wave number")
    if any(x == 0 for x in b):
        raise ValueError("amplitudes must be nonzero")
    return ParamPoint(s=s, eps=eps, a=a), b


def soliton_spec_json(params: ParamPoint, b_values) -> dict:
    # Fraction.__str__ drops unit denominators, matching hand-written specs.
    return {
        "s": str(params.s),
        "eps": str(params.eps),
        "a": [str(x) for x in params.a],
        "b": [str(Fraction(x)) for x in b_values],
    }


def load_soliton_spec(path: str) -> tuple[ParamPoint, tuple[Scalar, ...]]:
    with open(path) as f:
        return parse_soliton_spec(json.load(f))
