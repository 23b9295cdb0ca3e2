"""Izhikevich neuron dynamics: single-step Euler update, spike reset, presets.

Units follow the usual Izhikevich convention: v in mV, time in ms. The
recovery variable u and the input current I live on the same mV scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPIKE_THRESHOLD_MV = 30.0
DEFAULT_DT_MS = 0.5


@dataclass(frozen=True)
class IzhikevichParams:
    """Shape parameters (a, b, c, d) of the Izhikevich model."""

    a: float
    b: float
    c: float
    d: float


# Regular-spiking cells are used for excitatory neurons, fast-spiking for
# inhibitory neurons.
REGULAR_SPIKING = IzhikevichParams(a=0.02, b=0.2, c=-65.0, d=8.0)
FAST_SPIKING = IzhikevichParams(a=0.1, b=0.2, c=-65.0, d=2.0)

_PRESETS = {
    "regular_spiking": REGULAR_SPIKING,
    "fast_spiking": FAST_SPIKING,
}


def preset_params(kind: str) -> IzhikevichParams:
    """Return the canonical parameter set for ``kind``.

    ``kind`` is one of ``"regular_spiking"`` or ``"fast_spiking"``.
    """
    try:
        return _PRESETS[kind]
    except KeyError:
        raise ValueError(f"unknown neuron preset: {kind!r}") from None


@dataclass(frozen=True)
class NeuronState:
    """Membrane potential v, recovery u, and the spike flag of the last step.

    After any step v is strictly below the 30 mV threshold: a spiking
    neuron is stored post-reset, with ``fired`` marking the spike.
    """

    v: float
    u: float
    fired: bool = False

    @classmethod
    def resting(cls, params: IzhikevichParams) -> "NeuronState":
        """Standard resting initialization: v = c, u = b*c."""
        return cls(v=params.c, u=params.b * params.c, fired=False)


def step_neuron(
    state: NeuronState,
    params: IzhikevichParams,
    input_current: float,
    dt: float = DEFAULT_DT_MS,
) -> NeuronState:
    """Advance one neuron by a single forward-Euler step of length ``dt`` ms.

    Both derivatives are evaluated at the pre-step state. ``input_current``
    is applied as a direct per-step membrane increment in mV (delta-pulse
    convention: synaptic and stimulus events deposit their charge within
    the step, so the kick is not scaled by ``dt``). If the updated v
    reaches the 30 mV threshold the neuron is reset (v <- c, u <- u + d)
    and flagged as fired.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (math.isfinite(state.v) and math.isfinite(state.u) and math.isfinite(input_current)):
        raise_numeric_fault(state, input_current)

    v0, u0 = state.v, state.u
    v = v0 + (0.04 * v0 * v0 + 5.0 * v0 + 140.0 - u0) * dt + input_current
    u = u0 + params.a * (params.b * v0 - u0) * dt

    if not math.isfinite(v):
        raise_numeric_fault(state, input_current)

    if v >= SPIKE_THRESHOLD_MV:
        return NeuronState(v=params.c, u=u + params.d, fired=True)
    return NeuronState(v=v, u=u, fired=False)


def raise_numeric_fault(state: NeuronState, input_current: float) -> None:
    from .errors import NumericFault

    raise NumericFault(
        f"non-finite neuron update (v={state.v}, u={state.u}, I={input_current})"
    )
