"""Synaptic dynamics: pair-based STDP kernel, weight update/decay, and
short-term plasticity (resource/utilization model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .neuron import DEFAULT_DT_MS


@dataclass(frozen=True)
class StdpParams:
    """Amplitudes and time windows of the two STDP branches.

    The kernel is A_LTP*(1-1/tau_LTP)^dt for causal pairs (dt > 0) and
    -A_LTD*(1-1/tau_LTD)^(-dt) for anti-causal pairs.
    """

    a_ltp: float = 1.0
    a_ltd: float = 1.0
    tau_ltp: float = 20.0
    tau_ltd: float = 20.0

    def __post_init__(self) -> None:
        if self.tau_ltp <= 1 or self.tau_ltd <= 1:
            raise ConfigurationError(
                f"STDP windows must exceed 1 ms, got ({self.tau_ltp}, {self.tau_ltd})"
            )
        if self.a_ltp < 0 or self.a_ltd < 0:
            raise ConfigurationError("STDP amplitudes must be non-negative")


@dataclass(frozen=True)
class StpParams:
    """Short-term plasticity constants: depression recovery tau_d,
    facilitation decay tau_f, baseline utilization big_u."""

    tau_d: float = 200.0
    tau_f: float = 600.0
    big_u: float = 0.2

    def __post_init__(self) -> None:
        if self.tau_d <= 0 or self.tau_f <= 0:
            raise ConfigurationError("STP time constants must be positive")
        if not (0 < self.big_u <= 1):
            raise ConfigurationError(f"big_u must lie in (0, 1], got {self.big_u}")


@dataclass(frozen=True)
class StpState:
    """Per-presynaptic-neuron resources x and utilization u, both in [0, 1]."""

    x: float
    u: float

    @classmethod
    def fresh(cls, params: StpParams) -> "StpState":
        return cls(x=1.0, u=params.big_u)


@dataclass(frozen=True)
class WeightBounds:
    w_min: float = 0.0
    w_max: float = 20.0

    def __post_init__(self) -> None:
        if self.w_min >= self.w_max:
            raise ConfigurationError(
                f"w_min must be below w_max, got [{self.w_min}, {self.w_max}]"
            )


@dataclass(frozen=True)
class DecayParams:
    """Multiplicative per-step weight decay: w <- (1 - mu) * w."""

    mu: float = 5e-7

    def __post_init__(self) -> None:
        if not (0 <= self.mu < 1):
            raise ConfigurationError(f"mu must lie in [0, 1), got {self.mu}")


def stdp_delta_w(delta_t: float, params: StdpParams) -> float:
    """Weight change for a spike pair with timing difference ``delta_t`` =
    t_post - t_pre (ms). Exact coincidence (delta_t == 0) yields 0."""
    if not math.isfinite(delta_t):
        raise ValueError(f"delta_t must be finite, got {delta_t}")
    if delta_t > 0:
        return params.a_ltp * (1.0 - 1.0 / params.tau_ltp) ** delta_t
    if delta_t < 0:
        return -params.a_ltd * (1.0 - 1.0 / params.tau_ltd) ** (-delta_t)
    return 0.0


def stdp_integral(params: StdpParams) -> float:
    """Signed area under the continuous STDP kernel over all delta_t.

    Each branch integrates to A / (-ln(1 - 1/tau)); the result is the LTP
    half-area minus the LTD half-area. Negative values mean depression
    outweighs potentiation for uncorrelated spike pairs.
    """
    ltp_area = params.a_ltp / (-math.log(1.0 - 1.0 / params.tau_ltp))
    ltd_area = params.a_ltd / (-math.log(1.0 - 1.0 / params.tau_ltd))
    return ltp_area - ltd_area


def apply_weight_update(w: float, delta_w: float, bounds: WeightBounds) -> float:
    """Add ``delta_w`` and clamp into [w_min, w_max]."""
    return min(max(w + delta_w, bounds.w_min), bounds.w_max)


def apply_decay(w: float, params: DecayParams) -> float:
    return (1.0 - params.mu) * w


def stp_step(
    state: StpState,
    fired: bool,
    params: StpParams,
    dt: float = DEFAULT_DT_MS,
) -> StpState:
    """Advance the resource/utilization pair by one Euler step.

    dx/dt = (1 - x)/tau_d - u*x*f
    du/dt = (U - u)/tau_f + U*(1 - u)*f        with f a spike train

    The relaxation terms advance by dt; the f-driven terms are spike
    impulses and land in full on the step where the spike occurs (same
    impulse convention as synaptic transmission), evaluated at the
    pre-step state. The result is clamped into [0, 1] so x keeps its
    meaning as a resource fraction at any dt.
    """
    f = 1.0 if fired else 0.0
    x = state.x + (1.0 - state.x) / params.tau_d * dt - state.u * state.x * f
    u = state.u + (params.big_u - state.u) / params.tau_f * dt + params.big_u * (1.0 - state.u) * f
    return StpState(x=min(max(x, 0.0), 1.0), u=min(max(u, 0.0), 1.0))


def stp_scale(state: StpState) -> float:
    """Transmission factor s = u * x."""
    return state.u * state.x
