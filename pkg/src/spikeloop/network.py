"""Recurrent network engine: construction of the fully connected
excitatory/inhibitory network and the per-step update (input currents,
neuron dynamics, STP, pair-based STDP, weight decay, recording).

Neuron index layout (fixed at build time):
    [0, n_input)                          excitatory input group
    [n_input, n_input + n_output)         excitatory output group
    [n_input + n_output, n_excitatory)    excitatory hidden group
    [n_excitatory, n)                     inhibitory neurons

Plastic synapses are exactly the off-diagonal entries of the
excitatory-to-excitatory block; all other weights are frozen after
initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericFault
from .neuron import (
    DEFAULT_DT_MS,
    FAST_SPIKING,
    REGULAR_SPIKING,
    SPIKE_THRESHOLD_MV,
)
from .plasticity import DecayParams, StdpParams, StpParams, WeightBounds

_NOISE_CHUNK = 1024  # steps of Gaussian noise drawn per RNG call


@dataclass(frozen=True)
class NetworkConfig:
    n_excitatory: int = 80
    n_inhibitory: int = 20
    n_input: int = 10
    n_output: int = 10
    n_hidden: int = 60
    noise_sigma: float = 3.0
    # Unit conversions between the dimensionless protocol quantities and the
    # mV-scale membrane increments: synaptic events are scaled by `coupling`,
    # stimulus amplitudes by `stim_gain` (applied in the experiment layer).
    coupling: float = 1.8
    stim_gain: float = 4.5
    exc_init: tuple[float, float] = (0.0, 5.0)
    inh_init: tuple[float, float] = (-5.0, 0.0)
    rng_seed: int = 0
    dt: float = DEFAULT_DT_MS

    def __post_init__(self) -> None:
        if self.n_excitatory <= 0 or self.n_inhibitory < 0:
            raise ConfigurationError("neuron counts must be positive")
        if min(self.n_input, self.n_output, self.n_hidden) < 0:
            raise ConfigurationError("group sizes must be non-negative")
        if self.n_input + self.n_output + self.n_hidden != self.n_excitatory:
            raise ConfigurationError(
                "input + output + hidden group sizes "
                f"({self.n_input}+{self.n_output}+{self.n_hidden}) "
                f"must equal n_excitatory ({self.n_excitatory})"
            )
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be non-negative")
        if self.coupling <= 0:
            raise ConfigurationError("coupling must be positive")
        if self.stim_gain <= 0:
            raise ConfigurationError("stim_gain must be positive")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")

    @property
    def n(self) -> int:
        return self.n_excitatory + self.n_inhibitory

    @property
    def input_ids(self) -> np.ndarray:
        return np.arange(0, self.n_input)

    @property
    def output_ids(self) -> np.ndarray:
        return np.arange(self.n_input, self.n_input + self.n_output)

    @property
    def hidden_ids(self) -> np.ndarray:
        return np.arange(self.n_input + self.n_output, self.n_excitatory)


@dataclass
class SynapseMatrix:
    """Dense weight matrix with plasticity bookkeeping.

    ``w[j, i]`` is the weight from presynaptic j to postsynaptic i.
    ``last_spike`` holds each neuron's most recent spike time (-inf when
    it has never fired) and is the pairing partner for STDP.
    """

    w: np.ndarray
    n_exc: int
    last_spike: np.ndarray = field(default=None)  # type: ignore[assignment]
    plastic: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        n = self.w.shape[0]
        if self.last_spike is None:
            self.last_spike = np.full(n, -np.inf)
        if self.plastic is None:
            mask = np.zeros((n, n), dtype=bool)
            mask[: self.n_exc, : self.n_exc] = True
            np.fill_diagonal(mask, False)
            self.plastic = mask


def stdp_cutoff(params: StdpParams) -> float:
    """Pairs older than this (ms) are skipped to avoid stale-pair artifacts."""
    return 5.0 * max(params.tau_ltp, params.tau_ltd)


def apply_stdp_on_spikes(
    matrix: SynapseMatrix,
    spiking_neurons: np.ndarray,
    now: float,
    params: StdpParams,
    bounds: WeightBounds,
) -> None:
    """Nearest-neighbor pair updates for the neurons spiking at ``now``.

    Each new spike pairs with the partner's last recorded spike: a spiking
    postsynaptic neuron potentiates its plastic inputs, a spiking
    presynaptic neuron depresses its plastic outputs. The last-spike table
    is read as of the start of the step and updated afterwards, so
    neurons spiking in the same step pair with each other's previous
    spikes. Updates are clipped into the weight bounds.
    """
    n_exc = matrix.n_exc
    spiking_neurons = np.asarray(spiking_neurons, dtype=np.intp)
    exc_spk = spiking_neurons[spiking_neurons < n_exc]
    if exc_spk.size:
        age = now - matrix.last_spike[:n_exc]
        partners = np.flatnonzero(age <= stdp_cutoff(params))
        if partners.size:
            q_ltp = 1.0 - 1.0 / params.tau_ltp
            q_ltd = 1.0 - 1.0 / params.tau_ltd
            ltp = params.a_ltp * q_ltp ** age[partners]
            ltd = params.a_ltd * q_ltd ** age[partners]
            w = matrix.w
            w[np.ix_(partners, exc_spk)] += ltp[:, None]
            w[np.ix_(exc_spk, partners)] -= ltd[None, :]
            w[exc_spk, exc_spk] = 0.0  # self-connections stay absent
            block = w[:n_exc, :n_exc]
            np.clip(block, bounds.w_min, bounds.w_max, out=block)
    matrix.last_spike[spiking_neurons] = now


class Network:
    """Full simulation state plus the per-step update.

    A single instance is strictly single-threaded; run several instances
    with independent seeds for parallelism.
    """

    def __init__(
        self,
        config: NetworkConfig,
        stdp: StdpParams | None = None,
        stp: StpParams | None = None,
        decay: DecayParams | None = None,
        bounds: WeightBounds | None = None,
        record_spikes: bool = True,
    ):
        self.config = config
        self.stdp = stdp if stdp is not None else StdpParams()
        self.stp = stp if stp is not None else StpParams()
        self.decay = decay if decay is not None else DecayParams()
        self.bounds = bounds if bounds is not None else WeightBounds()
        self.record_spikes = record_spikes

        n, n_exc = config.n, config.n_excitatory
        self.n = n
        self.n_exc = n_exc
        self.rng = np.random.default_rng(config.rng_seed)

        # Weight draw order: one uniform(0,1) matrix row-major, scaled per
        # row kind, diagonal removed.
        raw = self.rng.uniform(size=(n, n))
        lo_e, hi_e = config.exc_init
        lo_i, hi_i = config.inh_init
        w = np.empty((n, n))
        w[:n_exc] = lo_e + raw[:n_exc] * (hi_e - lo_e)
        w[n_exc:] = lo_i + raw[n_exc:] * (hi_i - lo_i)
        np.fill_diagonal(w, 0.0)
        self.synapses = SynapseMatrix(w=w, n_exc=n_exc)

        # Excitatory neurons are regular-spiking, inhibitory fast-spiking.
        self.pa = np.where(np.arange(n) < n_exc, REGULAR_SPIKING.a, FAST_SPIKING.a)
        self.pb = np.where(np.arange(n) < n_exc, REGULAR_SPIKING.b, FAST_SPIKING.b)
        self.pc = np.where(np.arange(n) < n_exc, REGULAR_SPIKING.c, FAST_SPIKING.c)
        self.pd = np.where(np.arange(n) < n_exc, REGULAR_SPIKING.d, FAST_SPIKING.d)

        self.v = self.pc.copy()
        self.u = self.pb * self.pc
        self.fired = np.zeros(n, dtype=bool)
        self._fired_idx = np.empty(0, dtype=np.intp)

        # STP state, tracked for excitatory presynaptic neurons only.
        self.stp_x = np.ones(n_exc)
        self.stp_u = np.full(n_exc, self.stp.big_u)

        self.t = 0.0
        self._noise_buf: np.ndarray | None = None
        self._noise_pos = 0

        self._spike_times: list[np.ndarray] = []
        self._spike_ids: list[np.ndarray] = []

    @property
    def w(self) -> np.ndarray:
        return self.synapses.w

    def _noise(self) -> np.ndarray:
        # Chunked draws; values are consumed neuron-index ascending per step.
        if self._noise_buf is None or self._noise_pos >= _NOISE_CHUNK:
            self._noise_buf = self.rng.normal(
                0.0, self.config.noise_sigma, size=(_NOISE_CHUNK, self.n)
            )
            self._noise_pos = 0
        row = self._noise_buf[self._noise_pos]
        self._noise_pos += 1
        return row

    def step(self, drive: np.ndarray | None = None) -> np.ndarray:
        """Advance the whole network by one dt. Returns the ids of the
        neurons that spiked during this step.

        ``drive`` is the external stimulation vector e (mV scale) for this
        step, or None for no stimulation. Spikes from the previous step
        feed the synaptic current of this step (one-step delay).

        The total input I (synaptic events scaled by ``config.coupling``,
        plus stimulation and noise) is applied as a per-step membrane
        increment: spikes and pulses are treated as impulses that deposit
        their charge within the step, so the kick is not multiplied by dt.
        """
        cfg = self.config
        dt = cfg.dt
        n_exc = self.n_exc

        # I = g * sum_j f_j w_ji s_j + e + m, with s = u*x for excitatory
        # presynaptic neurons and s = 1 for inhibitory ones.
        idx = self._fired_idx
        if idx.size:
            s = np.ones(idx.size)
            exc = idx < n_exc
            sub = idx[exc]
            s[exc] = self.stp_u[sub] * self.stp_x[sub]
            current = cfg.coupling * (s @ self.synapses.w[idx])
        else:
            current = np.zeros(self.n)
        if drive is not None:
            current += drive
        if cfg.noise_sigma > 0:
            current += self._noise()

        # Forward Euler with both derivatives at the old state; the input
        # current enters as a direct increment (see docstring).
        v0, u0 = self.v, self.u
        v = v0 + (0.04 * v0 * v0 + 5.0 * v0 + 140.0 - u0) * dt + current
        u = u0 + self.pa * (self.pb * v0 - u0) * dt
        fired = v >= SPIKE_THRESHOLD_MV
        fidx = np.flatnonzero(fired)
        if fidx.size:
            v[fidx] = self.pc[fidx]
            u[fidx] += self.pd[fidx]
        if not np.isfinite(v).all():
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise NumericFault(f"non-finite membrane potential at neuron {bad}, t={self.t}")
        self.v, self.u = v, u

        # STP advances on this step's spike flags: relaxation by dt, the
        # spike-driven terms as full per-event impulses at the old state.
        f = fired[:n_exc].astype(np.float64)
        sx, su = self.stp_x, self.stp_u
        big_u = self.stp.big_u
        dx = (1.0 - sx) / self.stp.tau_d * dt - su * sx * f
        du_ = (big_u - su) / self.stp.tau_f * dt + big_u * (1.0 - su) * f
        sx += dx
        su += du_
        np.clip(sx, 0.0, 1.0, out=sx)
        np.clip(su, 0.0, 1.0, out=su)

        self.t += dt
        now = self.t

        if fidx.size:
            apply_stdp_on_spikes(self.synapses, fidx, now, self.stdp, self.bounds)
            if self.record_spikes:
                self._spike_times.append(np.full(fidx.size, now))
                self._spike_ids.append(fidx)

        # Eq. 8 decay, once per step on every plastic weight.
        block = self.synapses.w[:n_exc, :n_exc]
        block *= 1.0 - self.decay.mu

        self.fired = fired
        self._fired_idx = fidx
        return fidx

    def raster(self) -> tuple[np.ndarray, np.ndarray]:
        """All recorded spikes as (times_ms, neuron_ids), time-ordered."""
        if not self._spike_times:
            return np.empty(0), np.empty(0, dtype=np.intp)
        return np.concatenate(self._spike_times), np.concatenate(self._spike_ids)

    def mean_weight_from(self, group: np.ndarray) -> float:
        """Mean plastic weight from ``group`` to all other excitatory
        neurons (self-connections excluded from the count)."""
        return snapshot_mean_input_weight(self.synapses, group)


def build_network(
    config: NetworkConfig,
    stdp: StdpParams | None = None,
    stp: StpParams | None = None,
    decay: DecayParams | None = None,
    bounds: WeightBounds | None = None,
) -> Network:
    """Construct the network deterministically from ``config.rng_seed``."""
    return Network(config, stdp=stdp, stp=stp, decay=decay, bounds=bounds)


def network_step(net: Network, drive: np.ndarray | None = None) -> np.ndarray:
    """Functional alias for :meth:`Network.step`."""
    return net.step(drive)


def snapshot_mean_input_weight(matrix: SynapseMatrix, group: np.ndarray) -> float:
    """Arithmetic mean over plastic entries from ``group`` to all other
    excitatory neurons."""
    group = np.asarray(group, dtype=np.intp)
    if group.size == 0:
        raise ConfigurationError("cannot average weights of an empty group")
    n_exc = matrix.n_exc
    total = float(matrix.w[group, :n_exc].sum())  # diagonal entries are 0
    count = group.size * (n_exc - 1)
    return total / count
