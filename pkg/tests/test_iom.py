"""Charges: kernel enumeration vs literal formulas, closed forms, Newton map.

Oracles: quadratic/cubic sums are written out literally where compared to the
generic enumerator; closed forms at k=1,2 are transcribed as independent
expressions; the n=0 point pins the geometric-tail normalization against the
constant-field value; Newton consistency is checked both on exact closed
values and on mode polynomials.
"""

from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from toda_bo.iom import (
    Ibar_k_def,
    I_k_def,
    IomResult,
    M2_functional,
    M2_kernel,
    M3_functional,
    M3_kernel,
    M_from_I,
    ModeVector,
    closed_I,
    closed_Ibar,
    closed_M,
    fit_decay,
    power_geometric_tail,
)
from toda_bo.modes import (
    AlphaPoly,
    AlphaSeries,
    ModeContext,
    ModeTrunc,
    bracket,
    build_eta,
    build_xi,
    eta_zero,
    mono_weight,
    xi_zero,
)
from toda_bo.scalar import BudgetError, ParamPoint
from toda_bo.soliton import (
    decay_report,
    eta_series_from_taus,
    xi_series_from_taus,
)

CTX = ModeContext(F(1, 2), F(1, 8), ModeTrunc(6, 6))
P1 = ParamPoint(s=F(1, 2), eps=F(1, 8), a=(F(1, 5),))
P2 = ParamPoint(s=F(1, 2), eps=F(1, 8), a=(F(1, 5), F(-1, 7)))
P0 = ParamPoint(s=F(1, 2), eps=F(1, 8), a=())
Q = F(1, 4)


def eta_modes(params, b, window) -> ModeVector:
    return ModeVector.from_series(eta_series_from_taus(params, b, window), window)


def xi_modes(params, b, window) -> ModeVector:
    return ModeVector.from_series(xi_series_from_taus(params, b, window), window)


def poly_mode_table(ctx, side="eta", span=1) -> ModeVector:
    # modes beyond the truncation span are identically zero in the truncated
    # model (their true content is all heavier than the span), so widening
    # the table just records zero polynomials
    field = build_eta(ctx) if side == "eta" else build_xi(ctx)
    W = span * ctx.trunc.n_modes
    return ModeVector(W, {m: field.mode(m) for m in range(-W, W + 1)})


# #### mode vectors ############################################################


def test_mode_vector_validation():
    with pytest.raises(ValueError):
        ModeVector(2, {3: F(1)})
    with pytest.raises(ValueError):
        ModeVector(-1, {})
    mv = ModeVector.constant(F(1, 8), 4)
    assert mv[0] == F(1, 8) and mv[3] == 0 and mv.covers(-4) and not mv.covers(5)


# #### enumerator vs literal sums ##############################################


def test_first_charge_is_zero_mode():
    mv = eta_modes(P1, (F(1, 2),), 8)
    res = I_k_def(mv, 1, 8, Q)
    assert res.value == mv[0]
    assert res.tail == 0


def test_second_charge_literal_sum():
    mv = eta_modes(P2, (F(1, 2), F(1, 3)), 16)
    N = 8
    expect = mv[0] * mv[0]
    for m in range(1, N + 1):
        expect += (1 - 1 / Q) * Q**m * mv[-m] * mv[m]
    assert I_k_def(mv, 2, N, Q).value == expect


def test_third_charge_matches_direct_triple_sum():
    mv = eta_modes(P1, (F(1, 2),), 12)
    N = 4

    def coeff(q, m):
        return F(1) if m == 0 else (1 - 1 / q) * q**m

    expect = F(0)
    for m12 in range(N + 1):
        for m13 in range(N + 1):
            for m23 in range(N + 1):
                c = coeff(Q, m12) * coeff(Q, m13) * coeff(Q, m23)
                e1, e2, e3 = -m12 - m13, m12 - m23, m13 + m23
                expect += c * mv[e1] * mv[e2] * mv[e3]
    assert I_k_def(mv, 3, N, Q).value == expect


def test_constant_field_powers():
    mv = ModeVector.constant(F(1, 8), 16)
    for k in (1, 2, 3):
        assert I_k_def(mv, k, 8, Q).value == F(1, 8) ** k
    assert M2_kernel(mv, 8, Q) == F(1, 8) ** 2 / 2
    assert M3_kernel(mv, 8, Q) == F(1, 8) ** 3 / 3


def test_minus_orientation_is_inverted_plus():
    mv = xi_modes(P1, (F(1, 2),), 12)
    a = Ibar_k_def(mv, 2, 6, Q).value
    b = I_k_def(mv, 2, 6, 1 / Q, kind="plus").value
    assert a == b


def test_budget_guard():
    mv = ModeVector.constant(F(1), 8)
    with pytest.raises(BudgetError):
        I_k_def(mv, 4, 48, Q)


# #### closed forms ############################################################


@pytest.mark.parametrize("params", [P0, P1, P2], ids=["n0", "n1", "n2"])
def test_closed_small_k_literals(params):
    q, eps, a = params.q, params.eps, params.a
    n = len(a)
    e1 = sum(a, F(0))
    e2 = sum(a[i] * a[j] for i in range(n) for j in range(i + 1, n))
    assert closed_I(1, params) == (1 - q) * e1 + q**n * eps
    expect2 = (
        (1 - q) * (1 - q**2) / q * e2
        + q ** (n - 1) * (1 - q**2) * e1 * eps
        + q ** (2 * n) * eps**2
    )
    assert closed_I(2, params) == expect2


def test_closed_matches_constant_field_at_empty_point():
    for k in (1, 2, 3, 4):
        assert closed_I(k, P0) == P0.eps**k
        assert closed_Ibar(k, P0) == (1 / P0.eps) ** k


def test_closed_M_base_cases():
    for params in (P0, P1, P2):
        assert closed_M(1, params) == closed_I(1, params)
        assert closed_M(1, params, bar=True) == closed_Ibar(1, params)


def test_newton_closed_consistency():
    for params in (P0, P1, P2):
        for bar in (False, True):
            close = closed_Ibar if bar else closed_I
            vals = [close(j, params) for j in range(1, 5)]
            for k in (1, 2, 3, 4):
                assert M_from_I(vals[:k], params, bar) == closed_M(k, params, bar)


# #### functional route ########################################################


def test_functional_first_charge_equals_zero_mode():
    mv = poly_mode_table(CTX)
    res = I_k_def(mv, 1, CTX.trunc.n_modes, CTX.q)
    assert res.value == eta_zero(CTX).functional_value()


def test_m2_from_newton_matches_kernel_formula_exactly():
    # the quadratic Newton combination telescopes term-by-term in the kernel
    # exponent, so truncating both routes at the same N keeps exact equality
    mv = poly_mode_table(CTX)
    N, q = CTX.trunc.n_modes, CTX.q
    i1 = I_k_def(mv, 1, N, q).value
    i2 = I_k_def(mv, 2, N, q).value
    newton = M_from_I([i1, i2], P1, one=AlphaPoly.one(), zero=AlphaPoly.zero())
    assert newton == M2_kernel(mv, N, q)


def test_m3_from_newton_matches_kernel_formula_on_window():
    # the cubic routes differ beyond the weight window (their truncation
    # boundaries are shaped differently), but any monomial of weight <= N
    # needs kernel exponents <= N/2 on every route, so the pruned polynomials
    # agree exactly
    mv = poly_mode_table(CTX, span=2)
    N, D, q = CTX.trunc.n_modes, CTX.trunc.d_deg, CTX.q
    vals = [I_k_def(mv, k, N, q).value for k in (1, 2, 3)]
    newton = M_from_I(vals, P1, one=AlphaPoly.one(), zero=AlphaPoly.zero())
    assert newton.pruned(N, D) == M3_kernel(mv, N, q).pruned(N, D)


def test_mbar_newton_matches_kernel_on_window():
    mv = poly_mode_table(CTX, side="xi")
    N, D = CTX.trunc.n_modes, CTX.trunc.d_deg
    qbar = 1 / CTX.q
    vals = [Ibar_k_def(mv, k, N, CTX.q).value for k in (1, 2)]
    newton = M_from_I(vals, P1, bar=True, one=AlphaPoly.one(), zero=AlphaPoly.zero())
    assert newton.pruned(N, D) == M2_kernel(mv, N, qbar).pruned(N, D)


def certified_zero(series: AlphaSeries) -> bool:
    g = series.guar
    for slot, poly in series.coeffs.items():
        span = sum(abs(x) for x in slot)
        for mono, c in poly.terms.items():
            if g.covers(span, mono_weight(mono), len(mono)) and c != 0:
                return False
    return True


def test_charges_commute_on_certified_window():
    N, q = CTX.trunc.n_modes, CTX.q
    i2 = AlphaSeries.functional(CTX, I_k_def(poly_mode_table(CTX), 2, N, q).value)
    i2bar = AlphaSeries.functional(
        CTX, Ibar_k_def(poly_mode_table(CTX, "xi"), 2, N, q).value
    )
    pairs = [
        (eta_zero(CTX), i2),
        (xi_zero(CTX), i2bar),
        (eta_zero(CTX), i2bar),
        (xi_zero(CTX), i2),
        (i2, i2bar),
    ]
    for f, g in pairs:
        res = bracket(f, g)
        assert certified_zero(res)
    assert not certified_zero(bracket(eta_zero(CTX), build_eta(CTX)))


def test_m2_m3_functionals_stable_under_window_growth():
    # every cell inside the smaller build's claimed region must be
    # reproduced by the wider build; disagreement would mean the guarantee
    # overclaims
    small = ModeContext(F(1, 2), F(1, 8), ModeTrunc(4, 6))
    big = ModeContext(F(1, 2), F(1, 8), ModeTrunc(8, 6))
    for builder in (M2_functional, M3_functional):
        lo = builder(small).functional_value()
        hi = builder(big).functional_value()
        g = builder(small).guar
        seen = set(lo.terms) | set(hi.terms)
        checked = 0
        for mono in seen:
            if not g.covers(0, mono_weight(mono), len(mono)):
                continue
            checked += 1
            assert lo.terms.get(mono, F(0)) == hi.terms.get(mono, F(0)), mono
        assert checked > 3


# #### tails and decay #########################################################


@given(
    j=st.integers(min_value=0, max_value=4),
    num=st.integers(min_value=1, max_value=9),
    N=st.integers(min_value=0, max_value=20),
)
@settings(max_examples=60, deadline=None)
def test_power_tail_telescopes(j, num, N):
    r = F(num, 10)
    left = power_geometric_tail(j, r, N)
    right = power_geometric_tail(j, r, N + 1)
    assert left - right == F(N + 2) ** j * r ** (N + 1)
    assert left > 0


def test_power_tail_geometric_base_case():
    r = F(1, 3)
    assert power_geometric_tail(0, r, 5) == r**6 / (1 - r)
    assert power_geometric_tail(2, F(0), 5) == 0
    with pytest.raises(ValueError):
        power_geometric_tail(1, F(3, 2), 5)


def test_fit_decay_exact_geometric():
    rho = F(1, 3)
    mv = ModeVector(6, {m: F(5) * rho ** abs(m) for m in range(-6, 7)})
    h, r = fit_decay(mv, rho)
    assert h == 5 and r == rho
    with pytest.raises(ValueError):
        fit_decay(mv, F(2))


def soliton_decay(params, b, window):
    rep = decay_report(params, b)
    rho = max(rep["outer_margin"], rep["inner_margin"], params.q)
    return fit_decay(eta_modes(params, b, window), rho), rho


def test_tail_bounds_truncation_error():
    b = (F(1, 2),)
    mv = eta_modes(P1, b, 40)
    (decay, rho) = soliton_decay(P1, b, 40)
    small = I_k_def(mv, 2, 10, Q, decay=decay)
    large = I_k_def(mv, 2, 30, Q, decay=decay)
    assert small.tail is not None
    assert abs(small.value - large.value) <= small.tail
    assert abs(large.value - closed_I(2, P1)) <= large.tail


def test_tail_covers_out_of_window_modes():
    b = (F(1, 2),)
    narrow = eta_modes(P1, b, 12)
    (decay, _) = soliton_decay(P1, b, 12)
    res = I_k_def(narrow, 3, 10, Q, decay=decay)
    wide = I_k_def(eta_modes(P1, b, 24), 3, 10, Q)
    assert abs(res.value - wide.value) <= res.tail
    with pytest.raises(ValueError):
        I_k_def(narrow, 3, 10, Q)


def test_convergence_toward_closed_value():
    b = (F(1, 2),)
    mv = eta_modes(P1, b, 40)
    resid = [abs(I_k_def(mv, 2, N, Q).value - closed_I(2, P1)) for N in (8, 16)]
    assert resid[1] < resid[0] / 4
    mvx = xi_modes(P1, b, 40)
    residbar = [
        abs(Ibar_k_def(mvx, 2, N, Q).value - closed_Ibar(2, P1)) for N in (8, 16)
    ]
    assert residbar[1] < residbar[0] / 4


def test_iom_result_json():
    r = IomResult(2, F(3, 7), 16, F(1, 1000), "plus")
    j = r.to_json()
    assert j["value"] == "3/7" and j["tail"] == "1/1000"
    assert j["k"] == 2 and j["N"] == 16 and j["kind"] == "plus"
    assert j["value_decimal"].startswith("0.42857142857142857142857142857")
    assert IomResult(1, F(1), 4).to_json()["tail"] is None
