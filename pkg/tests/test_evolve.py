"""Mode-flow integrator: kernel, right-hand side, stepper, trajectory driver.

Oracles: the right-hand side is compared against a literal double loop over
the kernel sum; the zero-mode derivative is cancelled algebraically by the
l <-> -l pairing, which the kernel table preserves exactly in floats; data
supported on one side closes into a triangular system whose first two modes
integrate in closed form (exponential and a two-exponential difference), and
the numeric trajectory must match both; the order of the stepper comes out
of step-halving; wave initial data is compared against the exact tau
pipeline with time-advanced amplitudes.
"""

from __future__ import annotations

import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toda_bo.evolve import (
    BlowUpError,
    DEFAULT_AMPLITUDES,
    DEFAULT_POINT,
    RandomInit,
    RunConfig,
    SolitonInit,
    State,
    analytic_soliton_modes,
    bo_rhs,
    conserved_pair,
    initial_state,
    kernel,
    order_ratio,
    q_from_gamma,
    rk4_step,
    run,
)

Q_COMPLEX = q_from_gamma(0.1 + 0.05j)


def random_state(seed: int, N: int, q: complex = Q_COMPLEX, scale: float = 0.3):
    rng = np.random.default_rng(seed)
    modes = scale * (
        rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)
    )
    return State(N, modes, 0.0, q)


def brute_rhs(s: State) -> np.ndarray:
    out = np.zeros(2 * s.N + 1, dtype=np.complex128)
    for m in range(-s.N, s.N + 1):
        acc = 0j
        for l in range(-s.N, s.N + 1):
            if l == 0 or abs(m + l) > s.N:
                continue
            sgn = 1 if l > 0 else -1
            acc += sgn * (1 - s.q ** abs(l)) * s.mode(-l) * s.mode(m + l)
        out[m + s.N] = acc
    return out


# #### parameters and state ####################################################


def test_q_from_gamma_half_plane():
    assert abs(abs(q_from_gamma(0.3)) - 1) < 1e-15
    q = q_from_gamma(0.1 + 0.05j)
    assert abs(q) == pytest.approx(math.exp(-2 * math.pi * 0.05))
    assert cmath.phase(q) == pytest.approx(2 * math.pi * 0.1)
    with pytest.raises(ValueError):
        q_from_gamma(0.1 - 0.2j)


def test_state_validation():
    with pytest.raises(ValueError):
        State(4, np.zeros(8), 0.0, 0.5)  # wrong window length
    with pytest.raises(ValueError):
        State(0, np.zeros(1), 0.0, 0.5)
    with pytest.raises(ValueError):
        State(2, np.zeros(5), 0.0, 1.5)  # |q| > 1
    with pytest.raises(ValueError):
        State(2, np.zeros(5), 0.0, 0.0)
    bad = np.zeros(5, dtype=complex)
    bad[1] = np.nan
    with pytest.raises(BlowUpError):
        State(2, bad, 0.0, 0.5)


def test_kernel_is_exactly_antisymmetric():
    for q in (0.25, Q_COMPLEX):
        g = kernel(10, q)
        assert g[10] == 0
        for l in range(1, 11):
            assert g[10 + l] == -g[10 - l]  # exact float negation
            assert g[10 + l] == 1 - q**l


# #### right-hand side #########################################################


def test_rhs_of_constant_state_vanishes():
    s = State(8, np.zeros(17, dtype=complex), 0.0, 0.25)
    s = State(8, s.modes + np.eye(17)[8] * 0.7, 0.0, 0.25)
    assert np.all(bo_rhs(s) == 0)


def test_zero_mode_derivative_cancels():
    s = random_state(11, 16)
    g = kernel(s.N, s.q)
    # the pairing cancels term by term once the products share a grouping
    for l in range(1, s.N + 1):
        pos = g[s.N + l] * (s.mode(-l) * s.mode(l))
        neg = g[s.N - l] * (s.mode(l) * s.mode(-l))
        assert pos + neg == 0
    norm = np.abs(s.modes).sum()
    assert abs(bo_rhs(s)[s.N]) <= 1e-14 * norm * norm


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([4, 9, 16]))
def test_rhs_matches_double_loop(seed, N):
    s = random_state(seed, N)
    got = bo_rhs(s)
    want = brute_rhs(s)
    scale = max(np.abs(want).max(), 1.0)
    assert np.abs(got - want).max() <= 1e-13 * scale


def test_rhs_three_mode_example():
    # support {-1, 0, 1}: every derivative reduces to one or two kernel terms
    q = 0.25
    c, d_plus, d_minus = 0.6, 0.21, -0.14
    modes = np.zeros(9, dtype=complex)
    modes[4] = c
    modes[5] = d_minus  # eta_1 (stored by mode index, -N..N)
    modes[3] = d_plus  # eta_{-1}
    rhs = bo_rhs(State(4, modes, 0.0, q))
    # pairing cancellation up to product rounding: (g*a)*b vs (g*b)*a
    assert abs(rhs[4]) <= 1e-16
    assert rhs[5] == pytest.approx(-(1 - q) * c * d_minus, rel=1e-15)
    assert rhs[3] == pytest.approx((1 - q) * c * d_plus, rel=1e-15)
    assert rhs[6] == pytest.approx(-(1 - q) * d_minus**2, rel=1e-15)
    assert rhs[2] == pytest.approx((1 - q) * d_plus**2, rel=1e-15)


def test_one_sided_support_is_invariant():
    # eta_{-l} eta_{m+l} needs l <= 0 and l >= -m: impossible for m < 0
    N = 8
    modes = np.zeros(2 * N + 1, dtype=complex)
    modes[N] = 0.4
    modes[N + 1] = 0.2 + 0.1j
    modes[N + 2] = -0.05
    s = State(N, modes, 0.0, 0.25)
    assert np.all(bo_rhs(s)[:N] == 0)
    assert bo_rhs(s)[N] == 0
    for _ in range(20):
        s = rk4_step(s, 0.05)
    assert np.all(s.modes[:N] == 0)
    assert s.modes[N] == 0.4  # zero mode untouched, exactly


# #### stepper #################################################################


def test_rk4_leaves_equilibrium_alone():
    modes = np.zeros(9, dtype=complex)
    modes[4] = 0.3 - 0.2j
    s = State(4, modes, 1.5, Q_COMPLEX)
    out = rk4_step(s, 0.1)
    assert np.array_equal(out.modes, s.modes)
    assert out.t == pytest.approx(1.6)


def test_zero_state_stays_zero():
    s = State(6, np.zeros(13, dtype=complex), 0.0, 0.25)
    for _ in range(10):
        s = rk4_step(s, 0.1)
    assert np.all(s.modes == 0)


@pytest.mark.parametrize("q", [0.25, Q_COMPLEX])
def test_triangular_closed_forms(q):
    # one-sided data: eta_0 is frozen, eta_1 is a pure exponential, eta_2 is
    # driven by eta_1^2 and integrates to a two-exponential difference
    N, dt, steps = 8, 1e-3, 500
    c, delta = 0.3, 0.05
    modes = np.zeros(2 * N + 1, dtype=complex)
    modes[N] = c
    modes[N + 1] = delta
    s = State(N, modes, 0.0, q)
    for _ in range(steps):
        s = rk4_step(s, dt)
    T = steps * dt
    a_rate = (1 - q * q) * c
    b_rate = 2 * (1 - q) * c
    source = -(1 - q) * delta * delta
    eta1 = delta * cmath.exp(-(1 - q) * c * T)
    eta2 = source * (cmath.exp(-b_rate * T) - cmath.exp(-a_rate * T)) / (
        a_rate - b_rate
    )
    assert s.mode(0) == c
    assert abs(s.mode(1) - eta1) <= 1e-12 * abs(eta1)
    assert abs(s.mode(2) - eta2) <= 1e-9 * abs(eta2)
    assert s.mode(-1) == 0


def test_rk4_is_fourth_order():
    s = initial_state(SolitonInit(), 32)
    ratio = order_ratio(s, 0.25, 8)
    assert 12 <= ratio <= 20


# #### initial data and trajectory driver ######################################


def test_soliton_state_matches_exact_pipeline_at_t0():
    s = initial_state(SolitonInit(), 16)
    ref = analytic_soliton_modes(DEFAULT_POINT, DEFAULT_AMPLITUDES, 0.0, 16)
    assert np.array_equal(s.modes, ref)
    assert s.q == complex(float(DEFAULT_POINT.q))


def test_random_state_is_seeded_and_decaying():
    a = initial_state(RandomInit(seed=5), 12, Q_COMPLEX)
    b = initial_state(RandomInit(seed=5), 12, Q_COMPLEX)
    c = initial_state(RandomInit(seed=6), 12, Q_COMPLEX)
    assert np.array_equal(a.modes, b.modes)
    assert not np.array_equal(a.modes, c.modes)
    for m in range(-12, 13):
        assert abs(a.mode(m)) <= 0.25 * 0.5 ** abs(m) * math.sqrt(2) + 1e-15
    with pytest.raises(ValueError):
        initial_state(RandomInit(seed=5), 12)  # q is required
    with pytest.raises(TypeError):
        initial_state(object(), 12, Q_COMPLEX)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(dt=0.0)
    with pytest.raises(ValueError):
        RunConfig(steps=0)
    with pytest.raises(ValueError):
        RunConfig(check_interval=0)


def test_run_samples_and_conserves():
    cfg = RunConfig(n_modes=16, dt=1e-3, steps=40, check_interval=10)
    records, summary = run(cfg)
    assert len(records) == 5  # t=0 plus four samples
    assert [sorted(r) for r in records] == [["I1", "I2", "modes", "t"]] * 5
    assert records[0]["t"] == 0.0
    assert len(records[0]["modes"]) == 33
    json.dumps(records)  # JSON-ready snapshots
    assert summary["eta0_drift"] <= 1e-14
    assert summary["i2_rel_drift"] <= 1e-12
    assert summary["max_mode_error"] is not None
    assert summary["max_mode_error"] <= 1e-9
    assert summary["final_t"] == pytest.approx(0.04)
    assert summary["samples"] == 5


def test_run_random_reports_no_mode_error():
    cfg = RunConfig(
        n_modes=12,
        dt=1e-3,
        steps=20,
        check_interval=5,
        init=RandomInit(seed=2),
        q=Q_COMPLEX,
    )
    records, summary = run(cfg)
    assert summary["max_mode_error"] is None
    assert summary["eta0_drift"] <= 1e-13
    assert summary["i2_rel_drift"] <= 1e-6
    assert len(records) == 5


def test_blow_up_guard_trips():
    cfg = RunConfig(n_modes=16, dt=1e-3, steps=5, blowup=1e-3)
    with pytest.raises(BlowUpError):
        run(cfg)
