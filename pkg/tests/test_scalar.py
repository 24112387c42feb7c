from __future__ import annotations

import decimal
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from toda_bo.scalar import (
    ONE,
    ParamError,
    ParamPoint,
    PoleError,
    ZERO,
    det_ring,
    e_from_p,
    e_geometric_tail,
    newton_p_from_e,
    parse_scalar,
    power_sum_extended,
    sample_amplitudes,
    sample_param_point,
    sample_shift_amount,
    scalar_decimal,
    scalar_str,
)

F = Fraction

rationals = st.fractions(
    min_value=-100, max_value=100, max_denominator=40
)


# #########################################################################
# rendering and parsing
# #########################################################################

@pytest.mark.parametrize(
    "x, text",
    [
        (F(0), "0/1"),
        (F(3), "3/1"),
        (F(-3, 7), "-3/7"),
        (F(6, 4), "3/2"),
    ],
)
def test_scalar_str(x, text):
    assert scalar_str(x) == text


@given(rationals)
def test_scalar_str_round_trip(x):
    assert parse_scalar(scalar_str(x)) == x


@given(rationals)
def test_scalar_str_normalized_oracle(x):
    # independent normalization oracle: gcd-reduced pair
    import math

    p, q = x.numerator, x.denominator
    g = math.gcd(abs(p), q)
    assert scalar_str(x) == f"{p // g}/{q // g}"


def _long_division_digits(x: Fraction, digits: int) -> str:
    """Independent decimal oracle: integer long division, round half even."""
    assert x > 0
    p, q = x.numerator, x.denominator
    # find adjusted exponent e with 10**e <= x < 10**(e+1)
    e = 0
    while p < q:
        p *= 10
        e -= 1
    while p >= 10 * q:
        q *= 10
        e += 1
    # now want round(x / 10**(e+1-digits)) by half-even
    num, den = x.numerator, x.denominator
    shift = digits - 1 - e
    if shift >= 0:
        num *= 10**shift
    else:
        den *= 10 ** (-shift)
    whole, rem = divmod(num, den)
    if 2 * rem > den or (2 * rem == den and whole % 2 == 1):
        whole += 1
    return str(whole)


@pytest.mark.parametrize(
    "x",
    [
        F(1, 3),
        F(2, 3),
        F(22, 7),
        F(1, 7),
        F(355, 113),
        F(10**40 + 1, 3**30),
        F(1, 10**35),
    ],
)
def test_scalar_decimal_long_division_oracle(x):
    rendered = scalar_decimal(x, digits=30)
    got = decimal.Decimal(rendered)
    mantissa = "".join(map(str, got.as_tuple().digits)).rstrip("0") or "0"
    want = _long_division_digits(x, 30).rstrip("0") or "0"
    assert mantissa == want


@given(rationals.filter(lambda x: x != 0))
def test_scalar_decimal_relative_error(x):
    d = decimal.Decimal(scalar_decimal(x, digits=30))
    back = Fraction(d)
    ulp = Fraction(10) ** (d.adjusted() - 29)
    assert abs(back - x) <= ulp / 2


def test_scalar_decimal_exact_small():
    assert scalar_decimal(F(1, 2)) == "0.5"
    assert scalar_decimal(F(-7, 4)) == "-1.75"
    assert scalar_decimal(F(0)) == "0"


# #########################################################################
# determinant and Newton identities
# #########################################################################

def test_det_ring_small():
    assert det_ring([[F(5)]]) == 5
    assert det_ring([[F(1), F(2)], [F(3), F(4)]]) == -2
    assert det_ring([[F(2), F(0), F(1)], [F(1), F(1), F(0)], [F(0), F(3), F(1)]]) == 5


def test_det_ring_rejects_bad_shapes():
    with pytest.raises(ValueError):
        det_ring([])
    with pytest.raises(ValueError):
        det_ring([[F(1), F(2)]])


def _elementary_from_roots(roots):
    # expand prod (y + x_i) and read off coefficients
    coeffs = [ONE]
    for r in roots:
        nxt = [ZERO] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] += c * r
            nxt[i + 1] += c
        coeffs = nxt
    return list(reversed(coeffs[:-1]))


@pytest.mark.parametrize(
    "e, expect",
    [
        ([F(5)], F(5)),
        ([F(3), F(2)], F(5)),
        ([F(1), F(1), F(1)], F(1)),
    ],
)
def test_newton_p_from_e_examples(e, expect):
    assert newton_p_from_e(e) == expect


def test_newton_p_from_e_root_oracle():
    rng = random.Random(20240815)
    for _ in range(25):
        k = rng.randint(1, 6)
        roots = [F(rng.randint(-6, 6), rng.randint(1, 5)) for _ in range(k)]
        es = _elementary_from_roots(roots)
        for j in range(1, k + 1):
            power_sum = sum(r**j for r in roots)
            assert newton_p_from_e(es[:j]) == power_sum


def test_newton_round_trip_with_inverse_relation():
    rng = random.Random(7)
    for _ in range(25):
        k = rng.randint(1, 6)
        ps = [F(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(k)]
        es = e_from_p(ps)
        assert [newton_p_from_e(es[: j + 1]) for j in range(k)] == ps


def test_newton_p_from_e_rejects_empty():
    with pytest.raises(ValueError):
        newton_p_from_e([])


# #########################################################################
# geometric-alphabet elementary values and extended power sums
# #########################################################################

def test_e_geometric_tail_trivial():
    assert e_geometric_tail(F(3, 7), F(1, 5), 0) == 1


def test_e_geometric_tail_k1_is_geometric_sum():
    x0, q = F(1, 2), F(1, 3)
    assert e_geometric_tail(x0, q, 1) == F(3, 4)
    # truncated sums approach it with remainder exactly x0*q**M/(1-q)
    for M in (10, 20, 40, 60):
        partial = sum(x0 * q**m for m in range(M))
        assert e_geometric_tail(x0, q, 1) - partial == x0 * q**M / (1 - q)


def test_e_geometric_tail_k2_example():
    assert e_geometric_tail(ONE, F(1, 2), 2) == F(4, 3)


def test_e_geometric_tail_product_oracle():
    # coefficient of y**k in prod_{m<M}(1 + q**m x0 y), error shrinks like q**M
    x0, q = F(2, 5), F(1, 3)
    for k in (1, 2, 3):
        closed = e_geometric_tail(x0, q, k)
        prev_err = None
        for M in (20, 30, 40):
            coeffs = [ONE] + [ZERO] * k
            for m in range(M):
                xm = x0 * q**m
                for i in range(k, 0, -1):
                    coeffs[i] += coeffs[i - 1] * xm
            err = abs(closed - coeffs[k])
            if prev_err is not None:
                assert err < prev_err * q**5
            prev_err = err


def test_e_geometric_tail_pole():
    with pytest.raises(PoleError):
        e_geometric_tail(ONE, ONE, 2)


def test_power_sum_extended_examples():
    p0 = ParamPoint(s=F(1, 2), eps=F(1, 2))
    assert p0.q == F(1, 4)
    # n = 0 tail only: eps/(1-q) style values
    p_third = ParamPoint(s=F(1, 3), eps=F(1, 2))  # q = 1/9
    assert power_sum_extended(1, p_third) == F(1, 2) / (1 - F(1, 9))

    pt = ParamPoint(s=F(1, 2), eps=F(1, 7), a=(F(1, 5),))
    got = power_sum_extended(1, pt)
    assert got == F(1, 5) + F(1, 4) * F(1, 7) / (1 - F(1, 4))


def test_power_sum_extended_partial_sum_oracle():
    pt = ParamPoint(s=F(1, 2), eps=F(1, 8), a=(F(1, 5), F(-1, 6)))
    q = pt.q
    for i in (1, 2, 3):
        closed = power_sum_extended(i, pt)
        partial = sum(ak**i for ak in pt.a) + sum(
            (q ** (pt.n + m) * pt.eps) ** i for m in range(200)
        )
        remainder = (q ** (pt.n + 200) * pt.eps) ** i / (1 - q**i)
        assert closed - partial == remainder


# #########################################################################
# parameter points and samplers
# #########################################################################

def test_param_point_guards():
    with pytest.raises(ParamError):
        ParamPoint(s=F(1), eps=F(1, 2))
    with pytest.raises(ParamError):
        ParamPoint(s=F(1, 2), eps=F(0))
    with pytest.raises(ParamError):
        ParamPoint(s=F(1, 2), eps=F(1, 8), a=(F(1, 5), F(1, 5)))
    with pytest.raises(ParamError):
        # a_2 = q * a_1
        ParamPoint(s=F(1, 2), eps=F(1, 8), a=(F(1, 5), F(1, 20)))
    with pytest.raises(ParamError):
        # eps * q**0 hits a_1
        ParamPoint(s=F(1, 2), eps=F(1, 5), a=(F(1, 5),))
    with pytest.raises(ParamError):
        # eps * q**2 hits a_1
        ParamPoint(s=F(1, 2), eps=F(1, 5), a=(F(1, 80),))


def test_param_point_inverted_round_trip():
    pt = ParamPoint(s=F(1, 2), eps=F(1, 8), a=(F(1, 5), F(-1, 6)))
    inv = pt.inverted()
    assert inv.q == 4
    assert inv.inverted() == pt


def test_param_point_json():
    pt = ParamPoint(s=F(1, 2), eps=F(-1, 8), a=(F(1, 5),))
    assert pt.to_json() == {"s": "1/2", "eps": "-1/8", "a": ["1/5"]}


def test_sample_param_point_deterministic_and_bounded():
    p1 = sample_param_point(random.Random(42), 3)
    p2 = sample_param_point(random.Random(42), 3)
    assert p1 == p2
    assert p1.q == F(1, 4)
    assert all(F(1, 8) <= abs(ak) <= F(1, 4) for ak in p1.a)
    assert F(1, 16) <= abs(p1.eps) <= F(1, 8)


def test_sample_amplitudes_bounds():
    rng = random.Random(3)
    for n in (1, 2, 3):
        bs = sample_amplitudes(rng, n)
        assert len(bs) == n
        assert all(F(1, 4) <= abs(b) <= F(3, 4) for b in bs)


def test_sample_shift_amount_bounds():
    rng = random.Random(11)
    for _ in range(50):
        alpha = sample_shift_amount(rng)
        assert 0 < abs(alpha) <= F(1, 8)
