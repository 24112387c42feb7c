"""Exact rational scalars, sampled parameter points, symmetric-function helpers.

Everything symbolic in this package is computed over `Scalar`
(= `fractions.Fraction`), so identities are decided exactly.  Square roots of
the deformation parameter q never appear: the sampler draws s and derives
q = s**2, keeping all arithmetic rational.
"""

from __future__ import annotations

import decimal
import random
from dataclasses import dataclass
from fractions import Fraction

Scalar = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class ParamError(ValueError):
    """A parameter point violates a non-degeneracy constraint."""


class PoleError(ZeroDivisionError):
    """A requested value sits on a pole (e.g. q**i == 1)."""


class BudgetError(RuntimeError):
    """A computation would exceed its configured size budget."""


def scalar_str(x: Scalar) -> str:
    """Render as 'p/q' in lowest terms; integers render as 'k/1'."""
    return f"{x.numerator}/{x.denominator}"


def parse_scalar(text: str) -> Scalar:
    """Inverse of scalar_str; also accepts plain integers like '3'."""
    return Fraction(text)


def scalar_decimal(x: Scalar, digits: int = 30) -> str:
    """Decimal rendering with `digits` significant digits, round-half-even."""
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        d = decimal.Decimal(x.numerator) / decimal.Decimal(x.denominator)
    return str(d)


def det_ring(rows: list) -> object:
    """Determinant by first-column cofactor expansion.

    Entries may live in any commutative ring supporting +, unary -, and *.
    Division-free, so polynomial entries are fine; cost is irrelevant at the
    k <= 6 sizes used here.
    """
    n = len(rows)
    if n == 0:
        raise ValueError("empty matrix")
    if any(len(r) != n for r in rows):
        raise ValueError("matrix is not square")
    if n == 1:
        return rows[0][0]
    total = None
    for i, row in enumerate(rows):
        minor = [r[1:] for j, r in enumerate(rows) if j != i]
        term = row[0] * det_ring(minor)
        if i % 2:
            term = -term
        total = term if total is None else total + term
    return total


def newton_p_from_e(e: list, *, one=ONE, zero=ZERO):
    """Power sum p_k from elementary symmetric values e_1..e_k.

    Expands the k x k determinant whose first column is (i+1)*e_{i+1}, with a
    unit superdiagonal and constant diagonals e_{i-j+1} elsewhere.  Works over
    any commutative ring; pass that ring's `one` and `zero`.
    """
    k = len(e)
    if k == 0:
        raise ValueError("need at least e_1")

    def entry(i: int, j: int):
        if j == 0:
            return e[i] * (i + 1)
        m = i - j + 1
        if m < 0:
            return zero
        if m == 0:
            return one
        return e[m - 1]

    return det_ring([[entry(i, j) for j in range(k)] for i in range(k)])


def e_from_p(p: list, *, one=ONE) -> list:
    """Elementary symmetric e_1..e_k from power sums p_1..p_k.

    Triangular recurrence k*e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} p_i.
    Inverse of newton_p_from_e; used as a cross-check oracle and by tests.
    """
    es = [one]
    for k in range(1, len(p) + 1):
        acc = None
        for i in range(1, k + 1):
            term = es[k - i] * p[i - 1]
            if i % 2 == 0:
                term = -term
            acc = term if acc is None else acc + term
        es.append(acc * Fraction(1, k))
    return es[1:]


def e_geometric_tail(x0: Scalar, q: Scalar, k: int) -> Scalar:
    """k-th elementary symmetric value of the alphabet (x0, q*x0, q**2*x0, ...).

    Closed form x0**k * q**(k(k-1)/2) / prod_{i=1..k}(1 - q**i).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return ONE
    denom = ONE
    for i in range(1, k + 1):
        f = ONE - q**i
        if f == 0:
            raise PoleError(f"q**{i} == 1")
        denom *= f
    return x0**k * q ** (k * (k - 1) // 2) / denom


@dataclass(frozen=True)
class ParamPoint:
    """A sampled parameter assignment (s, eps, a_1..a_n) with q = s**2.

    The constraints keep every interaction coefficient, shift factor and tau
    denominator used downstream finite: a entries distinct and separated by
    the q-multiplication orbit, and q**m * eps clear of every a entry for
    |m| <= guard_range.
    """

    s: Scalar
    eps: Scalar
    a: tuple[Scalar, ...] = ()
    guard_range: int = 8

    def __post_init__(self) -> None:
        s, eps = self.s, self.eps
        if s in (0, 1, -1):
            raise ParamError("s must avoid {0, 1, -1}")
        q = s * s
        if eps == 0:
            raise ParamError("eps must be nonzero")
        a = self.a
        for i, ai in enumerate(a):
            if ai == 0:
                raise ParamError("a entries must be nonzero")
            for j in range(i):
                aj = a[j]
                if ai == aj or ai == q * aj or aj == q * ai:
                    raise ParamError("a entries hit an interaction pole")
        for m in range(-self.guard_range, self.guard_range + 1):
            qm_eps = q**m * eps
            if any(qm_eps == ai for ai in a):
                raise ParamError("q**m * eps hits an a entry")

    @property
    def q(self) -> Scalar:
        return self.s * self.s

    @property
    def n(self) -> int:
        return len(self.a)

    def inverted(self) -> "ParamPoint":
        """Mirror point s -> 1/s, eps -> 1/eps, a_k -> 1/a_k.

        The mirrored closed forms for the bar-side charges are plain closed
        forms evaluated here; validity of the guards transfers exactly.
        """
        return ParamPoint(
            1 / self.s, 1 / self.eps, tuple(1 / x for x in self.a), self.guard_range
        )

    def to_json(self) -> dict:
        return {
            "s": scalar_str(self.s),
            "eps": scalar_str(self.eps),
            "a": [scalar_str(x) for x in self.a],
        }


def power_sum_extended(i: int, p: ParamPoint) -> Scalar:
    """Power sum of the alphabet (a_1..a_n, q**n eps, q**(n+1) eps, ...).

    The geometric tail is summed in closed form: q**(n*i) eps**i / (1 - q**i).
    Mirrored values are obtained by calling with p.inverted().
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    q = p.q
    if q**i == 1:
        raise PoleError(f"q**{i} == 1")
    tail = q ** (p.n * i) * p.eps**i / (ONE - q**i)
    return sum((ak**i for ak in p.a), start=ZERO) + tail


def sample_param_point(
    rng: random.Random,
    n: int,
    s: Scalar = Fraction(1, 2),
    guard_range: int = 8,
) -> ParamPoint:
    """Draw a valid point with |a_k| in [1/8, 1/4] and |eps| in [1/16, 1/8].

    Small magnitudes keep the unit-circle Laurent expansions of the tau
    ratios geometrically decaying, which the convergent checks rely on.
    """
    for _ in range(1000):
        a = []
        for _k in range(n):
            num = rng.randint(1, 9)
            den = rng.randint(4 * num, 8 * num)
            a.append(Fraction(rng.choice((1, -1)) * num, den))
        num = rng.randint(1, 9)
        den = rng.randint(8 * num, 16 * num)
        eps = Fraction(rng.choice((1, -1)) * num, den)
        try:
            return ParamPoint(s, eps, tuple(a), guard_range)
        except ParamError:
            continue
    raise ParamError("sampler failed to find a valid point")


def sample_amplitudes(rng: random.Random, n: int) -> tuple[Scalar, ...]:
    """Draw n amplitudes with |b_k| in [1/4, 3/4] (inside the unit disc)."""
    out = []
    for _k in range(n):
        num = rng.randint(1, 3)
        den = rng.randint(max(2, (4 * num + 2) // 3), 4 * num)
        out.append(Fraction(rng.choice((1, -1)) * num, den))
    return tuple(out)


def sample_shift_amount(rng: random.Random) -> Scalar:
    """Draw a nonzero shift parameter with |alpha| <= 1/8."""
    num = rng.randint(1, 9)
    den = rng.randint(8 * num, 24 * num)
    return Fraction(rng.choice((1, -1)) * num, den)
