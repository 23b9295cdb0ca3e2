"""Configuration loading and deterministic result serialization.

Config files are JSON; unknown keys are rejected. Output tables are plain
CSV with a single header row and numbers printed at 9 significant digits,
so identical results serialize to identical bytes. The run summary is
recomputed from the emitted tables, which makes `analyze` an exact
round trip by construction.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .embodiment import (
    EVENT_PULSE,
    ArenaConfig,
    LoopTaskConfig,
)
from .errors import AnalysisError, ConfigurationError
from .experiment import (
    CellResult,
    ExperimentSpec,
    RunResult,
    SweepSpec,
    compute_evoked_rates,
    compute_reaction_times,
)
from .network import NetworkConfig
from .plasticity import DecayParams, StdpParams, StpParams, WeightBounds

SPIKES_FILE = "spikes.csv"
WEIGHTS_FILE = "weights.csv"
EVENTS_FILE = "events.csv"
TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"
SWEEP_FILE = "sweep.csv"

INPUT_EVOKED_WINDOW_MS = 50.0
OTHERS_EVOKED_WINDOW_MS = 200.0


def fmt9(x: float) -> str:
    """Fixed 9-significant-digit rendering used by every table."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.9g}"


def q9(x: float) -> float:
    """Round-trip a value through the serialized precision."""
    return float(fmt9(x))


# ---------------------------------------------------------------------------
# config loading

_TASK_KEYS = {
    "loop": {
        "kind", "mode", "stim_frequency_hz", "stim_amplitude",
        "response_window_ms", "response_quorum", "removal_duration_ms",
        "open_removal_probability", "removal_schedule",
    },
    "arena": {
        "kind", "arena_side_cm", "robot_radius_cm", "sensor_max",
        "sensor_threshold", "sensor_range_cm", "sensor_angle_rad",
        "control_interval_ms", "k", "c_default", "stim_amplitude",
    },
}


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {key!r} in {where}")


def _build(cls, section: dict, where: str, tuple_fields: set[str] = frozenset()):
    allowed = set(cls.__dataclass_fields__)
    _check_keys(section, allowed, where)
    kwargs = dict(section)
    for name in tuple_fields:
        if name in kwargs:
            kwargs[name] = tuple(kwargs[name])
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


def _parse_task(section: dict) -> LoopTaskConfig | ArenaConfig:
    kind = section.get("kind", "loop")
    if kind not in _TASK_KEYS:
        raise ConfigurationError(f"unknown task kind {kind!r}")
    _check_keys(section, _TASK_KEYS[kind], "task")
    body = {k: v for k, v in section.items() if k != "kind"}
    if kind == "loop":
        if "removal_schedule" in body:
            body["removal_schedule"] = tuple(
                (float(start), float(duration))
                for start, duration in body["removal_schedule"]
            )
        return _build(LoopTaskConfig, body, "task", tuple_fields={"removal_duration_ms"})
    return _build(ArenaConfig, body, "task")


_RUN_KEYS = {
    "network", "stdp", "stp", "decay", "bounds", "task",
    "duration_ms", "seed", "snapshot_interval_ms",
}


def _parse_run_spec(doc: dict) -> ExperimentSpec:
    _check_keys(doc, _RUN_KEYS, "run spec")
    kwargs: dict[str, Any] = {}
    if "network" in doc:
        kwargs["network"] = _build(
            NetworkConfig, doc["network"], "network",
            tuple_fields={"exc_init", "inh_init"},
        )
    if "stdp" in doc:
        kwargs["stdp"] = _build(StdpParams, doc["stdp"], "stdp")
    if "stp" in doc:
        kwargs["stp"] = _build(StpParams, doc["stp"], "stp")
    if "decay" in doc:
        kwargs["decay"] = _build(DecayParams, doc["decay"], "decay")
    if "bounds" in doc:
        kwargs["bounds"] = _build(WeightBounds, doc["bounds"], "bounds")
    if "task" in doc:
        kwargs["task"] = _parse_task(doc["task"])
    for scalar in ("duration_ms", "seed", "snapshot_interval_ms"):
        if scalar in doc:
            kwargs[scalar] = doc[scalar]
    return ExperimentSpec(**kwargs)


def load_spec(path: str | Path) -> ExperimentSpec | SweepSpec:
    """Parse and validate a run or sweep config file.

    A document with a top-level "sweep" key is a sweep spec; everything
    else is a single-run spec.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top level must be an object")

    if "sweep" in doc:
        _check_keys(doc, {"sweep", "base"}, "sweep spec")
        sweep = doc["sweep"]
        _check_keys(sweep, {"a_ltd", "tau_ltd", "repeats"}, "sweep")
        base = _parse_run_spec(doc.get("base", {}))
        return SweepSpec(
            a_ltd_values=tuple(sweep["a_ltd"]),
            tau_ltd_values=tuple(sweep["tau_ltd"]),
            repeats=sweep.get("repeats", 20),
            base=base,
        )
    return _parse_run_spec(doc)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    doc = asdict(spec)
    if is_dataclass(spec.task):
        doc["task"]["kind"] = "loop" if isinstance(spec.task, LoopTaskConfig) else "arena"
    return doc


# ---------------------------------------------------------------------------
# output writing

def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(result: RunResult, out_dir: str | Path) -> dict:
    """Emit spikes/weights/events tables plus summary and manifest for one
    run; returns the manifest document."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    _write_csv(
        out / SPIKES_FILE,
        ["time_ms", "neuron_id"],
        ((fmt9(t), str(int(i))) for t, i in zip(result.spike_times, result.spike_ids)),
    )
    _write_csv(
        out / WEIGHTS_FILE,
        ["time_ms", "input_mean", "output_mean", "hidden_mean"],
        (
            (fmt9(t), fmt9(a), fmt9(b), fmt9(c))
            for t, a, b, c in zip(
                result.snapshot_times,
                result.snapshot_input_mean,
                result.snapshot_output_mean,
                result.snapshot_hidden_mean,
            )
        ),
    )
    _write_csv(
        out / EVENTS_FILE,
        ["time_ms", "kind"],
        ((fmt9(t), kind) for t, kind in result.events),
    )
    files = [SPIKES_FILE, WEIGHTS_FILE, EVENTS_FILE]

    if result.poses is not None:
        _write_csv(
            out / TRAJECTORY_FILE,
            ["time_ms", "x_cm", "y_cm", "heading_rad", "v_left", "v_right"],
            (
                (fmt9(t), fmt9(p.x), fmt9(p.y), fmt9(p.heading), fmt9(p.v_left), fmt9(p.v_right))
                for t, p in result.poses
            ),
        )
        files.append(TRAJECTORY_FILE)

    manifest = {
        "engine_version": __version__,
        "seed": result.spec.seed,
        "spec": spec_to_dict(result.spec),
        "valid": result.valid,
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")

    summary = analyze_outputs(out)
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2) + "\n")

    manifest["created_utc"] = datetime.now(timezone.utc).isoformat()
    manifest["files"] = {
        name: _digest(out / name) for name in files + [SUMMARY_FILE]
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = path.read_text().splitlines()
    if not lines:
        raise AnalysisError(f"{path}: empty table")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def analyze_outputs(out_dir: str | Path) -> dict:
    """Recompute the run summary purely from the emitted tables."""
    out = Path(out_dir)
    manifest = json.loads((out / MANIFEST_FILE).read_text())
    spec = manifest["spec"]
    n_input = spec["network"]["n_input"]
    n_total = spec["network"]["n_excitatory"] + spec["network"]["n_inhibitory"]

    sp_header, sp_rows = _read_csv(out / SPIKES_FILE)
    if sp_header != ["time_ms", "neuron_id"]:
        raise AnalysisError(f"unexpected spikes header: {sp_header}")
    spike_times = np.array([float(r[0]) for r in sp_rows])
    spike_ids = np.array([int(r[1]) for r in sp_rows], dtype=np.intp)

    ev_header, ev_rows = _read_csv(out / EVENTS_FILE)
    if ev_header != ["time_ms", "kind"]:
        raise AnalysisError(f"unexpected events header: {ev_header}")
    events = [(float(r[0]), r[1]) for r in ev_rows]

    w_header, w_rows = _read_csv(out / WEIGHTS_FILE)
    if w_header != ["time_ms", "input_mean", "output_mean", "hidden_mean"]:
        raise AnalysisError(f"unexpected weights header: {w_header}")

    summary: dict[str, Any] = {
        "engine_version": manifest["engine_version"],
        "seed": manifest["seed"],
        "n_spikes": len(sp_rows),
    }

    pulses = np.array([t for t, kind in events if kind == EVENT_PULSE])
    summary["n_pulses"] = int(pulses.size)
    summary["n_removals"] = sum(1 for _, kind in events if kind == "removal_on")

    is_loop = spec.get("task", {}).get("kind") == "loop"
    if is_loop:
        reactions = compute_reaction_times(events)
        summary["reaction_times"] = {
            "count": int(reactions.size),
            "mean_ms": q9(float(reactions.mean())) if reactions.size else None,
            "stderr_ms": (
                q9(float(reactions.std(ddof=1) / math.sqrt(reactions.size)))
                if reactions.size > 1
                else None
            ),
        }
        if pulses.size:
            input_group = np.arange(n_input)
            others = np.arange(n_input, n_total)
            mean_in, se_in = compute_evoked_rates(
                spike_times, spike_ids, pulses, INPUT_EVOKED_WINDOW_MS, input_group
            )
            mean_ot, se_ot = compute_evoked_rates(
                spike_times, spike_ids, pulses, OTHERS_EVOKED_WINDOW_MS, others
            )
            summary["evoked_input_50ms"] = {
                "mean": q9(mean_in), "stderr": q9(se_in) if se_in is not None else None,
            }
            summary["evoked_others_200ms"] = {
                "mean": q9(mean_ot), "stderr": q9(se_ot) if se_ot is not None else None,
            }

    if w_rows:
        summary["weights"] = {
            "initial_input_mean": float(w_rows[0][1]),
            "final_input_mean": float(w_rows[-1][1]),
        }
    return summary


def write_sweep_outputs(results: list[CellResult], out_dir: str | Path) -> dict:
    """Emit the sweep table plus per-cell aggregated weight trajectories."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    files = []
    for cell in results:
        rows.append(
            (
                fmt9(cell.a_ltd),
                fmt9(cell.tau_ltd),
                fmt9(cell.stdp_integral),
                fmt9(cell.mean_si),
                str(cell.si_positive_pairs),
                str(cell.closed_final.size),
                fmt9(float(cell.closed_final.mean())),
                fmt9(float(cell.open_final.mean())),
            )
        )
        tag = f"a{fmt9(cell.a_ltd)}_t{fmt9(cell.tau_ltd)}"
        for mode, mean, se in (
            ("closed", cell.closed_traj_mean, cell.closed_traj_stderr),
            ("open", cell.open_traj_mean, cell.open_traj_stderr),
        ):
            name = f"weights_{mode}_{tag}.csv"
            _write_csv(
                out / name,
                ["time_ms", "mean_input_weight", "stderr"],
                (
                    (fmt9(t), fmt9(m), fmt9(s))
                    for t, m, s in zip(cell.snapshot_times, mean, se)
                ),
            )
            files.append(name)

    _write_csv(
        out / SWEEP_FILE,
        [
            "a_ltd", "tau_ltd", "stdp_integral", "mean_si",
            "si_positive_pairs", "n_pairs", "closed_final_mean", "open_final_mean",
        ],
        rows,
    )
    files.append(SWEEP_FILE)

    manifest = {
        "engine_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "files": {name: _digest(out / name) for name in files},
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
