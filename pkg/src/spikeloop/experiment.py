"""Experiment runner and analysis: full task runs, reaction times, evoked
firing rates, the selection indicator, the (A_LTD, tau_LTD) parameter
sweep, and the scripted 2-neuron minimal case.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .embodiment import (
    EVENT_REMOVAL_OFF,
    EVENT_REMOVAL_ON,
    ArenaConfig,
    ArenaTask,
    LoopTask,
    LoopTaskConfig,
    RobotPose,
)
from .errors import AnalysisError, ConfigurationError
from .network import Network, NetworkConfig
from .plasticity import (
    DecayParams,
    StdpParams,
    StpParams,
    WeightBounds,
    stdp_delta_w,
    stdp_integral,
)

CLOSED = "closed"
OPEN = "open"


@dataclass(frozen=True)
class ExperimentSpec:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    stdp: StdpParams = field(default_factory=StdpParams)
    stp: StpParams = field(default_factory=StpParams)
    decay: DecayParams = field(default_factory=DecayParams)
    bounds: WeightBounds = field(default_factory=WeightBounds)
    task: LoopTaskConfig | ArenaConfig | None = field(default_factory=LoopTaskConfig)
    duration_ms: float = 200_000.0
    seed: int = 0
    snapshot_interval_ms: float = 1000.0

    def __post_init__(self) -> None:
        if self.duration_ms <= 0:
            raise ConfigurationError("duration_ms must be positive")
        if self.snapshot_interval_ms <= 0:
            raise ConfigurationError("snapshot_interval_ms must be positive")


@dataclass
class RunResult:
    spec: ExperimentSpec
    spike_times: np.ndarray
    spike_ids: np.ndarray
    snapshot_times: np.ndarray
    snapshot_input_mean: np.ndarray
    snapshot_output_mean: np.ndarray
    snapshot_hidden_mean: np.ndarray
    events: list[tuple[float, str]]
    reaction_times: np.ndarray
    final_weights: np.ndarray
    poses: list[tuple[float, RobotPose]] | None = None
    valid: bool = True

    @property
    def final_input_mean(self) -> float:
        return float(self.snapshot_input_mean[-1])

    @property
    def initial_input_mean(self) -> float:
        return float(self.snapshot_input_mean[0])


def run_experiment(spec: ExperimentSpec) -> RunResult:
    """Deterministic full simulation of one experiment.

    The run seed feeds two independent streams: one for network build and
    noise, one for the protocol (removal durations, Bernoulli draws).
    """
    net_seed, proto_seed = np.random.SeedSequence(spec.seed).spawn(2)
    config = replace(spec.network, rng_seed=net_seed)
    net = Network(config, stdp=spec.stdp, stp=spec.stp, decay=spec.decay, bounds=spec.bounds)
    proto_rng = np.random.default_rng(proto_seed)

    dt = config.dt
    n_steps = int(round(spec.duration_ms / dt))
    snap_every = max(1, int(round(spec.snapshot_interval_ms / dt)))

    input_ids = config.input_ids
    output_ids = config.output_ids
    hidden_ids = config.hidden_ids
    output_set_lo = int(output_ids[0]) if output_ids.size else 0
    output_set_hi = int(output_ids[-1]) + 1 if output_ids.size else 0

    snap_t = [0.0]
    snap_in = [net.mean_weight_from(input_ids)]
    snap_out = [net.mean_weight_from(output_ids)] if output_ids.size else [math.nan]
    snap_hid = [net.mean_weight_from(hidden_ids)] if hidden_ids.size else [math.nan]

    loop_task: LoopTask | None = None
    arena: ArenaTask | None = None
    drive_buf = np.zeros(config.n)
    if isinstance(spec.task, LoopTaskConfig):
        loop_task = LoopTask(spec.task, proto_rng)
    elif isinstance(spec.task, ArenaConfig):
        if config.n_input < 2:
            raise ConfigurationError("arena task needs at least 2 input neurons")
        if config.n_output < 2:
            raise ConfigurationError("arena task needs at least 2 output neurons")
        half = config.n_output // 2
        arena = ArenaTask(
            spec.task,
            proto_rng,
            left_input=int(input_ids[0]),
            right_input=int(input_ids[1]),
            left_outputs=output_ids[:half],
            right_outputs=output_ids[half:],
        )
        arena_counts = np.zeros(config.n, dtype=np.int64)

    amp = None
    if loop_task is not None:
        amp = spec.task.stim_amplitude * config.stim_gain

    for k in range(n_steps):
        now = (k + 1) * dt
        drive = None
        if loop_task is not None:
            if loop_task.begin_step(now):
                drive_buf[input_ids] = amp
                drive = drive_buf
        elif arena is not None:
            if now >= arena.next_control_time:
                arena.control_tick(now, arena_counts)
                arena_counts[:] = 0
            drive = arena.drive_for_step(config.n)
            if drive is not None:
                drive *= config.stim_gain

        spiked = net.step(drive)
        if drive is drive_buf:
            drive_buf[input_ids] = 0.0

        if loop_task is not None and spiked.size:
            out = spiked[(spiked >= output_set_lo) & (spiked < output_set_hi)]
            if out.size:
                loop_task.observe_output_spikes(out, now)
        elif arena is not None and spiked.size:
            arena_counts[spiked] += 1

        if (k + 1) % snap_every == 0 or k == n_steps - 1:
            snap_t.append(now)
            snap_in.append(net.mean_weight_from(input_ids))
            snap_out.append(net.mean_weight_from(output_ids) if output_ids.size else math.nan)
            snap_hid.append(net.mean_weight_from(hidden_ids) if hidden_ids.size else math.nan)

    events: list[tuple[float, str]] = []
    if loop_task is not None:
        events = loop_task.events
    elif arena is not None:
        events = arena.events

    times, ids = net.raster()
    return RunResult(
        spec=spec,
        spike_times=times,
        spike_ids=ids,
        snapshot_times=np.asarray(snap_t),
        snapshot_input_mean=np.asarray(snap_in),
        snapshot_output_mean=np.asarray(snap_out),
        snapshot_hidden_mean=np.asarray(snap_hid),
        events=events,
        reaction_times=compute_reaction_times(events) if loop_task is not None else np.empty(0),
        final_weights=net.w.copy(),
        poses=arena.pose_log if arena is not None else None,
    )


def compute_reaction_times(event_log: list[tuple[float, str]]) -> np.ndarray:
    """Elapsed ms of each completed stimulation episode
    (removal_off -> removal_on); episodes cut off by the run end are
    dropped."""
    onsets: list[float] = []
    durations: list[float] = []
    start: float | None = None
    last_t = -math.inf
    for t, kind in event_log:
        if t < last_t:
            raise AnalysisError(f"event log times not ordered at t={t}")
        last_t = t
        if kind == EVENT_REMOVAL_OFF:
            if start is not None:
                raise AnalysisError(f"nested stimulation episode at t={t}")
            start = t
        elif kind == EVENT_REMOVAL_ON:
            if start is None:
                raise AnalysisError(f"removal without a preceding onset at t={t}")
            onsets.append(start)
            durations.append(t - start)
            start = None
    return np.asarray(durations)


def compute_evoked_rates(
    spike_times: np.ndarray,
    spike_ids: np.ndarray,
    pulses: np.ndarray,
    window_ms: float,
    group: np.ndarray,
) -> tuple[float, float | None]:
    """Spikes per stimulus for ``group``, counted in (pulse, pulse+window]
    and truncated at the next pulse. Returns (mean, stderr); stderr is
    None for fewer than two pulses."""
    if window_ms <= 0:
        raise AnalysisError("window must be positive")
    pulses = np.asarray(pulses, dtype=float)
    if pulses.size == 0:
        raise AnalysisError("no stimulation pulses to analyze")
    group = np.asarray(group)
    mask = np.isin(spike_ids, group)
    times = np.sort(np.asarray(spike_times, dtype=float)[mask])

    ends = pulses + window_ms
    ends[:-1] = np.minimum(ends[:-1], pulses[1:])
    counts = np.searchsorted(times, ends, side="right") - np.searchsorted(
        times, pulses, side="right"
    )
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(counts.size)) if counts.size > 1 else None
    return mean, stderr


def compute_selection_indicator(
    closed: list[RunResult], open_: list[RunResult]
) -> float:
    """Final-snapshot input-weight mean of the closed condition minus the
    open condition's (positive = controllable inputs were reinforced)."""
    if not closed or not open_:
        raise AnalysisError("both conditions need at least one run")
    ref = closed[0].spec.network
    for r in closed + open_:
        if r.spec.network != ref:
            raise AnalysisError("selection indicator requires matching network configs")
    w_ci = float(np.mean([r.final_input_mean for r in closed]))
    w_oi = float(np.mean([r.final_input_mean for r in open_]))
    return w_ci - w_oi


@dataclass(frozen=True)
class SweepSpec:
    a_ltd_values: tuple[float, ...]
    tau_ltd_values: tuple[float, ...]
    repeats: int = 20
    base: ExperimentSpec = field(default_factory=ExperimentSpec)

    def __post_init__(self) -> None:
        if not self.a_ltd_values or not self.tau_ltd_values:
            raise ConfigurationError("sweep grid must be non-empty")
        if self.repeats < 1:
            raise ConfigurationError("repeats must be at least 1")
        if not isinstance(self.base.task, LoopTaskConfig):
            raise ConfigurationError("sweeps run the loop task only")


@dataclass
class CellResult:
    a_ltd: float
    tau_ltd: float
    stdp_integral: float
    closed_final: np.ndarray
    open_final: np.ndarray
    snapshot_times: np.ndarray
    closed_traj_mean: np.ndarray
    closed_traj_stderr: np.ndarray
    open_traj_mean: np.ndarray
    open_traj_stderr: np.ndarray
    error: str | None = None

    @property
    def mean_si(self) -> float:
        return float(self.closed_final.mean() - self.open_final.mean())

    @property
    def si_positive_pairs(self) -> int:
        return int(np.sum(self.closed_final > self.open_final))


def derive_run_seed(
    base_seed: int, a_ltd: float, tau_ltd: float, repeat: int, condition: str
) -> int:
    """Stable per-run seed from the sweep coordinates; independent of the
    execution order of grid cells."""
    cond = 0 if condition == CLOSED else 1
    entropy = (
        int(base_seed),
        int(round(a_ltd * 1_000_000)),
        int(round(tau_ltd * 1_000_000)),
        int(repeat),
        cond,
    )
    words = np.random.SeedSequence(entropy).generate_state(2)
    return int(words[0]) << 32 | int(words[1])


def cell_spec(
    base: ExperimentSpec, a_ltd: float, tau_ltd: float, repeat: int, condition: str
) -> ExperimentSpec:
    stdp = replace(base.stdp, a_ltd=a_ltd, tau_ltd=tau_ltd)
    task = replace(base.task, mode=condition)
    seed = derive_run_seed(base.seed, a_ltd, tau_ltd, repeat, condition)
    return replace(base, stdp=stdp, task=task, seed=seed)


def _sweep_run(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    result = run_experiment(spec)
    return result.snapshot_times, result.snapshot_input_mean


def run_parameter_sweep(sweep: SweepSpec, jobs: int = 1) -> list[CellResult]:
    """Run the closed/open pair grid. Results depend only on
    (base seed, cell, repeat, condition), never on scheduling."""
    cells = [(a, tau) for a in sweep.a_ltd_values for tau in sweep.tau_ltd_values]
    specs = [
        cell_spec(sweep.base, a, tau, rep, cond)
        for (a, tau) in cells
        for cond in (CLOSED, OPEN)
        for rep in range(sweep.repeats)
    ]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_run, specs, chunksize=1))
    else:
        outcomes = [_sweep_run(s) for s in specs]

    results: list[CellResult] = []
    per_cell = 2 * sweep.repeats
    for i, (a, tau) in enumerate(cells):
        chunk = outcomes[i * per_cell : (i + 1) * per_cell]
        closed_chunk = chunk[: sweep.repeats]
        open_chunk = chunk[sweep.repeats :]
        times = closed_chunk[0][0]
        closed_traj = np.vstack([traj for _, traj in closed_chunk])
        open_traj = np.vstack([traj for _, traj in open_chunk])
        results.append(
            CellResult(
                a_ltd=a,
                tau_ltd=tau,
                stdp_integral=stdp_integral(
                    replace(sweep.base.stdp, a_ltd=a, tau_ltd=tau)
                ),
                closed_final=closed_traj[:, -1],
                open_final=open_traj[:, -1],
                snapshot_times=times,
                closed_traj_mean=closed_traj.mean(axis=0),
                closed_traj_stderr=_stderr(closed_traj),
                open_traj_mean=open_traj.mean(axis=0),
                open_traj_stderr=_stderr(open_traj),
            )
        )
    return results


def _stderr(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] < 2:
        return np.zeros(rows.shape[1])
    return rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])


def run_scripted_pair(
    params: StdpParams,
    events: list[tuple[float, str]],
    w0: float = 10.0,
    bounds: WeightBounds | None = None,
) -> np.ndarray:
    """Weight trajectory of one plastic pre->post connection under a
    scripted spike schedule (no network, no noise). ``events`` is a
    time-ordered list of (time_ms, 'pre'|'post'). Nearest-neighbor
    pairing with the same cutoff rule as the network engine."""
    if bounds is None:
        bounds = WeightBounds()
    cutoff = 5.0 * max(params.tau_ltp, params.tau_ltd)
    w = min(max(w0, bounds.w_min), bounds.w_max)
    trajectory = [w]
    last = {"pre": -math.inf, "post": -math.inf}
    prev_t = -math.inf
    for t, who in events:
        if t < prev_t:
            raise AnalysisError("spike schedule must be time-ordered")
        prev_t = t
        if who == "post":
            dt_pair = t - last["pre"]
            if dt_pair <= cutoff:
                w = min(max(w + stdp_delta_w(dt_pair, params), bounds.w_min), bounds.w_max)
        elif who == "pre":
            dt_pair = last["post"] - t
            if -dt_pair <= cutoff:
                w = min(max(w + stdp_delta_w(dt_pair, params), bounds.w_min), bounds.w_max)
        else:
            raise AnalysisError(f"unknown spike source {who!r}")
        last[who] = t
        trajectory.append(w)
    return np.asarray(trajectory)


def run_minimal_pair(
    params: StdpParams,
    dt_p: float,
    dt_d: float,
    cycles: int,
    w0: float = 10.0,
    bounds: WeightBounds | None = None,
) -> np.ndarray:
    """2-neuron minimal case: alternating spikes where the post neuron
    fires dt_p after each pre spike and the next pre spike follows dt_d
    later. Returns the weight after each full cycle (length cycles+1,
    starting value included)."""
    if dt_p <= 0 or dt_d <= 0:
        raise ConfigurationError("spike intervals must be positive")
    events: list[tuple[float, str]] = []
    t = 0.0
    for _ in range(cycles):
        events.append((t, "pre"))
        events.append((t + dt_p, "post"))
        t += dt_p + dt_d
    events.append((t, "pre"))  # trailing pre spike closes the last cycle
    trajectory = run_scripted_pair(params, events, w0=w0, bounds=bounds)
    # values after each pre spike = after each completed LTP/LTD cycle
    return trajectory[1::2]


def min_selection_frequency(params: StdpParams) -> float:
    """Lowest stimulation frequency (Hz) at which the minimal-pair weight
    selection operates: 1000 / (tau_LTP + tau_LTD)."""
    return 1000.0 / (params.tau_ltp + params.tau_ltd)


def success_rate(
    pre: np.ndarray, post: np.ndarray, threshold: float = 0.30
) -> bool:
    """True when the mean reaction time dropped by at least ``threshold``
    (boundary inclusive)."""
    pre = np.asarray(pre, dtype=float)
    post = np.asarray(post, dtype=float)
    if pre.size == 0 or post.size == 0:
        raise AnalysisError("both reaction-time windows must be non-empty")
    return float(post.mean()) <= (1.0 - threshold) * float(pre.mean())
