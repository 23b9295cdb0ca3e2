"""Schema-locked CSV loaders for the simulator's output tables."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

EVOLUTION_COLUMNS = ("time_ms", "mean_input_weight", "stderr")
SWEEP_COLUMNS = (
    "a_ltd",
    "tau_ltd",
    "stdp_integral",
    "mean_si",
    "si_positive_pairs",
    "n_pairs",
    "closed_final_mean",
    "open_final_mean",
)
SPIKES_COLUMNS = ("time_ms", "neuron_id")
EVENTS_COLUMNS = ("time_ms", "kind")


class SchemaError(Exception):
    """A table does not match its documented schema."""


def _read_table(path: str | Path, expected: tuple[str, ...]) -> list[dict[str, str]]:
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {list(expected)}")
        missing = [name for name in expected if name not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing column(s) {missing}; header is {header}"
            )
        extra = [name for name in header if name not in expected]
        if extra:
            raise SchemaError(
                f"{path}: unexpected column(s) {extra}; expected {list(expected)}"
            )
        rows = [dict(zip(header, row)) for row in reader if row]
    return rows


def load_evolution(path: str | Path) -> dict[str, np.ndarray]:
    """Load a per-cell weight-trajectory table: time, mean, standard error."""
    rows = _read_table(path, EVOLUTION_COLUMNS)
    return {
        name: np.array([float(r[name]) for r in rows]) for name in EVOLUTION_COLUMNS
    }


def load_sweep(path: str | Path) -> dict[str, np.ndarray]:
    """Load the sweep summary table (one row per kernel-parameter cell)."""
    rows = _read_table(path, SWEEP_COLUMNS)
    out: dict[str, np.ndarray] = {}
    for name in SWEEP_COLUMNS:
        if name in ("si_positive_pairs", "n_pairs"):
            out[name] = np.array([int(r[name]) for r in rows])
        else:
            out[name] = np.array([float(r[name]) for r in rows])
    return out


def load_spikes(path: str | Path) -> dict[str, np.ndarray]:
    """Load a spike raster table. An empty body is valid."""
    rows = _read_table(path, SPIKES_COLUMNS)
    return {
        "time_ms": np.array([float(r["time_ms"]) for r in rows]),
        "neuron_id": np.array([int(r["neuron_id"]) for r in rows], dtype=int),
    }


def load_events(path: str | Path) -> list[tuple[float, str]]:
    """Load a protocol event log as (time_ms, kind) pairs in file order."""
    rows = _read_table(path, EVENTS_COLUMNS)
    return [(float(r["time_ms"]), r["kind"]) for r in rows]
