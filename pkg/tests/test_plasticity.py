"""STDP kernel, weight bookkeeping, and short-term plasticity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikeloop import (
    ConfigurationError,
    DecayParams,
    StdpParams,
    StpParams,
    StpState,
    WeightBounds,
    apply_decay,
    apply_weight_update,
    stdp_delta_w,
    stdp_integral,
    stp_scale,
    stp_step,
)

SYMMETRIC = StdpParams(1.0, 1.0, 20.0, 20.0)
ASYMMETRIC = StdpParams(1.0, 1.1, 20.0, 24.0)

taus = st.floats(1.5, 200.0)
amps = st.floats(0.0, 5.0)


def random_params(draw_tuple):
    a_ltp, a_ltd, tau_ltp, tau_ltd = draw_tuple
    return StdpParams(a_ltp, a_ltd, tau_ltp, tau_ltd)


# ---------------------------------------------------------------- kernel


def test_ltp_closed_form_at_20ms():
    # (1 - 1/20)^20 = 0.95^20
    assert stdp_delta_w(20.0, SYMMETRIC) == pytest.approx(0.95**20, abs=1e-9)
    assert stdp_delta_w(20.0, SYMMETRIC) == pytest.approx(0.358485922408542, abs=1e-9)


def test_ltd_closed_form():
    assert stdp_delta_w(-10.0, ASYMMETRIC) == pytest.approx(
        -1.1 * (1.0 - 1.0 / 24.0) ** 10.0, abs=1e-12
    )


def test_coincident_pair_is_neutral():
    assert stdp_delta_w(0.0, SYMMETRIC) == 0.0
    assert stdp_delta_w(0.0, ASYMMETRIC) == 0.0


def test_non_finite_delta_t_rejected():
    with pytest.raises(ValueError):
        stdp_delta_w(float("nan"), SYMMETRIC)


@given(dt=st.floats(1e-6, 150.0), a_ltp=amps, a_ltd=amps, tau_ltp=taus, tau_ltd=taus)
def test_kernel_signs(dt, a_ltp, a_ltd, tau_ltp, tau_ltd):
    params = StdpParams(a_ltp, a_ltd, tau_ltp, tau_ltd)
    assert stdp_delta_w(dt, params) >= 0.0
    assert stdp_delta_w(-dt, params) <= 0.0


@given(dt=st.floats(1e-3, 150.0), tau=taus, amp=st.floats(0.01, 5.0))
def test_symmetric_kernel_antisymmetry(dt, tau, amp):
    params = StdpParams(amp, amp, tau, tau)
    assert stdp_delta_w(dt, params) == pytest.approx(
        -stdp_delta_w(-dt, params), rel=1e-12
    )


@given(
    dts=st.tuples(st.floats(0.01, 120.0), st.floats(0.01, 120.0)).map(sorted),
    tau=taus,
)
def test_kernel_magnitude_decays_with_lag(dts, tau):
    small, large = dts
    params = StdpParams(1.0, 1.0, tau, tau)
    assert stdp_delta_w(small, params) >= stdp_delta_w(large, params)
    assert abs(stdp_delta_w(-small, params)) >= abs(stdp_delta_w(-large, params))


# ---------------------------------------------------------------- integral


def test_integral_symmetric_is_zero():
    assert stdp_integral(SYMMETRIC) == pytest.approx(0.0, abs=1e-12)


def test_integral_reference_asymmetry_is_depressive():
    assert stdp_integral(ASYMMETRIC) < 0.0


def test_integral_known_positive_cell():
    assert stdp_integral(StdpParams(1.0, 0.95, 20.0, 28.0)) < 0.0
    assert stdp_integral(StdpParams(1.0, 0.5, 20.0, 20.0)) > 0.0


@given(a_ltp=st.floats(0.1, 3.0), a_ltd=st.floats(0.1, 3.0), tau_ltp=taus, tau_ltd=taus)
@settings(max_examples=40)
def test_integral_matches_numerical_quadrature(a_ltp, a_ltd, tau_ltp, tau_ltd):
    params = StdpParams(a_ltp, a_ltd, tau_ltp, tau_ltd)
    grid = np.linspace(1e-9, 60.0 * max(tau_ltp, tau_ltd), 400_001)
    ltp = a_ltp * (1.0 - 1.0 / tau_ltp) ** grid
    ltd = a_ltd * (1.0 - 1.0 / tau_ltd) ** grid
    numeric = np.trapezoid(ltp, grid) - np.trapezoid(ltd, grid)
    exact = stdp_integral(params)
    scale = a_ltp / (-math.log(1.0 - 1.0 / tau_ltp)) + a_ltd / (
        -math.log(1.0 - 1.0 / tau_ltd)
    )
    assert abs(exact - numeric) <= 0.01 * scale


# ---------------------------------------------------------------- updates


@given(w=st.floats(-50.0, 50.0), dw=st.floats(-50.0, 50.0))
def test_weight_update_respects_bounds(w, dw):
    bounds = WeightBounds(0.0, 20.0)
    out = apply_weight_update(w, dw, bounds)
    assert 0.0 <= out <= 20.0
    if 0.0 <= w + dw <= 20.0:
        assert out == pytest.approx(w + dw)


def test_decay_is_multiplicative():
    params = DecayParams(mu=5e-7)
    assert apply_decay(10.0, params) == pytest.approx(10.0 * (1.0 - 5e-7))
    assert apply_decay(0.0, params) == 0.0


# ---------------------------------------------------------------- STP


def test_fresh_stp_state():
    params = StpParams()
    state = StpState.fresh(params)
    assert state.x == 1.0
    assert state.u == params.big_u
    assert stp_scale(state) == pytest.approx(0.2)


def test_spike_depletes_resources_and_facilitates():
    params = StpParams()
    state = StpState.fresh(params)
    after = stp_step(state, fired=True, params=params)
    assert after.x < state.x
    assert after.u > state.u


def test_quiet_state_recovers_toward_baseline():
    params = StpParams()
    state = StpState(x=0.2, u=0.8)
    for _ in range(40_000):  # 20 s
        state = stp_step(state, fired=False, params=params)
    assert state.x == pytest.approx(1.0, abs=1e-6)
    assert state.u == pytest.approx(params.big_u, abs=1e-6)


def test_stp_bounded_under_long_random_drive():
    params = StpParams()
    state = StpState.fresh(params)
    rng = np.random.default_rng(1234)
    fired = rng.random(100_000) < 0.3
    lo_x = hi_x = state.x
    lo_u = hi_u = state.u
    for f in fired:
        state = stp_step(state, fired=bool(f), params=params)
        lo_x, hi_x = min(lo_x, state.x), max(hi_x, state.x)
        lo_u, hi_u = min(lo_u, state.u), max(hi_u, state.u)
    assert 0.0 <= lo_x and hi_x <= 1.0
    assert 0.0 <= lo_u and hi_u <= 1.0


@given(
    x=st.floats(0.0, 1.0),
    u=st.floats(0.0, 1.0),
    fired=st.booleans(),
    dt=st.floats(0.1, 2.0),
)
def test_stp_step_stays_in_unit_box(x, u, fired, dt):
    state = stp_step(StpState(x=x, u=u), fired=fired, params=StpParams(), dt=dt)
    assert 0.0 <= state.x <= 1.0
    assert 0.0 <= state.u <= 1.0


# ---------------------------------------------------------------- validation


@pytest.mark.parametrize(
    "factory",
    [
        lambda: StdpParams(tau_ltp=1.0),
        lambda: StdpParams(tau_ltd=0.5),
        lambda: StdpParams(a_ltp=-0.1),
        lambda: StpParams(tau_d=0.0),
        lambda: StpParams(big_u=0.0),
        lambda: StpParams(big_u=1.5),
        lambda: WeightBounds(5.0, 5.0),
        lambda: DecayParams(mu=1.0),
        lambda: DecayParams(mu=-1e-9),
    ],
)
def test_invalid_parameters_rejected(factory):
    with pytest.raises(ConfigurationError):
        factory()
