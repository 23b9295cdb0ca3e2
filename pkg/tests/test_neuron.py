"""Single-neuron dynamics: presets, Euler update, reset, fault handling."""

import math

import pytest
from hypothesis import given, strategies as st

from spikeloop import (
    FAST_SPIKING,
    REGULAR_SPIKING,
    NeuronState,
    NumericFault,
    preset_params,
    step_neuron,
)


def test_preset_values():
    assert REGULAR_SPIKING == preset_params("regular_spiking")
    assert FAST_SPIKING == preset_params("fast_spiking")
    assert (REGULAR_SPIKING.a, REGULAR_SPIKING.b) == (0.02, 0.2)
    assert (REGULAR_SPIKING.c, REGULAR_SPIKING.d) == (-65.0, 8.0)
    assert (FAST_SPIKING.a, FAST_SPIKING.b) == (0.1, 0.2)
    assert (FAST_SPIKING.c, FAST_SPIKING.d) == (-65.0, 2.0)


def test_unknown_preset_rejected():
    with pytest.raises(ValueError):
        preset_params("chattering")


def test_resting_state():
    state = NeuronState.resting(REGULAR_SPIKING)
    assert state.v == -65.0
    assert state.u == pytest.approx(-13.0)
    assert not state.fired


def test_subthreshold_step_matches_hand_euler():
    # One explicit Euler step from rest with a 2 mV kick, dt = 0.5 ms:
    # dv = (0.04*65^2 - 5*65 + 140 + 13) * 0.5, applied from v0 = -65,
    # and the kick enters as a direct membrane increment.
    state = NeuronState.resting(REGULAR_SPIKING)
    out = step_neuron(state, REGULAR_SPIKING, input_current=2.0, dt=0.5)
    v_expected = -65.0 + (0.04 * 65.0**2 - 5.0 * 65.0 + 140.0 + 13.0) * 0.5 + 2.0
    u_expected = -13.0 + 0.02 * (0.2 * -65.0 + 13.0) * 0.5
    assert out.v == pytest.approx(v_expected, abs=1e-12)
    assert out.u == pytest.approx(u_expected, abs=1e-12)
    assert not out.fired


def test_spike_resets_to_c_and_bumps_u():
    state = NeuronState(v=-40.0, u=-13.0)
    out = step_neuron(state, REGULAR_SPIKING, input_current=80.0)
    assert out.fired
    assert out.v == REGULAR_SPIKING.c
    u_pre_reset = -13.0 + 0.02 * (0.2 * -40.0 + 13.0) * 0.5
    assert out.u == pytest.approx(u_pre_reset + REGULAR_SPIKING.d, abs=1e-12)


def test_stored_voltage_always_below_threshold():
    state = NeuronState.resting(REGULAR_SPIKING)
    for _ in range(4000):
        state = step_neuron(state, REGULAR_SPIKING, input_current=4.0)
        assert state.v < 30.0


def test_constant_drive_produces_tonic_firing():
    state = NeuronState.resting(REGULAR_SPIKING)
    spikes = 0
    for _ in range(2000):  # 1 s of simulated time
        state = step_neuron(state, REGULAR_SPIKING, input_current=5.0)
        spikes += state.fired
    assert spikes > 5


def test_fast_spiking_fires_faster_than_regular():
    counts = {}
    for params in (REGULAR_SPIKING, FAST_SPIKING):
        state = NeuronState.resting(params)
        n = 0
        for _ in range(4000):
            state = step_neuron(state, params, input_current=5.0)
            n += state.fired
        counts[params] = n
    assert counts[FAST_SPIKING] > counts[REGULAR_SPIKING]


def test_invalid_dt_rejected():
    state = NeuronState.resting(REGULAR_SPIKING)
    with pytest.raises(ValueError):
        step_neuron(state, REGULAR_SPIKING, input_current=0.0, dt=0.0)


def test_non_finite_input_raises_numeric_fault():
    state = NeuronState.resting(REGULAR_SPIKING)
    with pytest.raises(NumericFault):
        step_neuron(state, REGULAR_SPIKING, input_current=float("nan"))
    with pytest.raises(NumericFault):
        step_neuron(NeuronState(v=float("inf"), u=0.0), REGULAR_SPIKING, 0.0)


@given(
    v=st.floats(-80.0, 29.0),
    u=st.floats(-20.0, 20.0),
    current=st.floats(-30.0, 30.0),
)
def test_step_is_deterministic_and_finite(v, u, current):
    state = NeuronState(v=v, u=u)
    a = step_neuron(state, REGULAR_SPIKING, current)
    b = step_neuron(state, REGULAR_SPIKING, current)
    assert (a.v, a.u, a.fired) == (b.v, b.u, b.fired)
    assert math.isfinite(a.v) and math.isfinite(a.u)
