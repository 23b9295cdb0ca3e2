"""Figure renderers. Each function reads tables, draws, and writes one image."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import load_events, load_evolution, load_spikes, load_sweep


def render_evolution(
    closed_path: str | Path,
    open_path: str | Path,
    out_path: str | Path,
    title: str = "Mean input-connection weight",
) -> Path:
    """Two-line time-evolution plot (closed vs open) with standard-error bands."""
    closed = load_evolution(closed_path)
    open_ = load_evolution(open_path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for table, label, color in (
        (closed, "closed loop", "tab:blue"),
        (open_, "open loop", "tab:red"),
    ):
        t = table["time_ms"] / 1000.0
        mean = table["mean_input_weight"]
        se = table["stderr"]
        ax.plot(t, mean, color=color, label=label)
        ax.fill_between(t, mean - se, mean + se, color=color, alpha=0.25, linewidth=0)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("mean weight from input neurons")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _pivot(values, a_ltd, tau_ltd, a_axis, tau_axis):
    grid = np.full((len(a_axis), len(tau_axis)), np.nan)
    a_index = {v: i for i, v in enumerate(a_axis)}
    t_index = {v: i for i, v in enumerate(tau_axis)}
    for a, t, v in zip(a_ltd, tau_ltd, values):
        grid[a_index[a], t_index[t]] = v
    return grid


def render_heatmaps(sweep_path: str | Path, out_path: str | Path) -> Path:
    """Side-by-side heatmaps over (LTD amplitude, LTD time constant): mean
    selection indicator and kernel integral."""
    sweep = load_sweep(sweep_path)
    a_axis = sorted(set(sweep["a_ltd"]))
    tau_axis = sorted(set(sweep["tau_ltd"]))

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, column, label in (
        (axes[0], "mean_si", "mean selection indicator"),
        (axes[1], "stdp_integral", "kernel integral"),
    ):
        grid = _pivot(sweep[column], sweep["a_ltd"], sweep["tau_ltd"], a_axis, tau_axis)
        largest = np.nanmax(np.abs(grid)) if np.isfinite(grid).any() else 1.0
        image = ax.imshow(
            grid,
            origin="lower",
            aspect="auto",
            cmap="coolwarm",
            vmin=-largest,
            vmax=largest,
            extent=(-0.5, len(tau_axis) - 0.5, -0.5, len(a_axis) - 0.5),
        )
        ax.set_xticks(range(len(tau_axis)), [f"{v:g}" for v in tau_axis])
        ax.set_yticks(range(len(a_axis)), [f"{v:g}" for v in a_axis])
        ax.set_xlabel("LTD time constant (ms)")
        ax.set_ylabel("LTD amplitude")
        ax.set_title(label)
        fig.colorbar(image, ax=ax)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _kernel_curve(delta_t, a_ltp, a_ltd, tau_ltp, tau_ltd):
    values = np.zeros_like(delta_t)
    pos = delta_t > 0
    neg = delta_t < 0
    values[pos] = a_ltp * (1.0 - 1.0 / tau_ltp) ** delta_t[pos]
    values[neg] = -a_ltd * (1.0 - 1.0 / tau_ltd) ** (-delta_t[neg])
    return values


def render_kernel(
    parameter_sets: list[tuple[float, float, float, float]],
    out_path: str | Path,
    span_ms: float = 100.0,
) -> Path:
    """Plasticity-kernel curves (weight change vs spike-time difference) for
    one or more (A_LTP, A_LTD, tau_LTP, tau_LTD) parameter sets."""
    delta_t = np.linspace(-span_ms, span_ms, 2001)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for a_ltp, a_ltd, tau_ltp, tau_ltd in parameter_sets:
        label = f"A=({a_ltp:g}, {a_ltd:g}), tau=({tau_ltp:g}, {tau_ltd:g})"
        ax.plot(delta_t, _kernel_curve(delta_t, a_ltp, a_ltd, tau_ltp, tau_ltd), label=label)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.axvline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel("post minus pre spike time (ms)")
    ax.set_ylabel("weight change")
    ax.set_title("Plasticity kernel")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_raster(spikes_path: str | Path, out_path: str | Path) -> Path:
    """Spike raster scatter plot. An empty table yields empty axes."""
    spikes = load_spikes(spikes_path)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.scatter(spikes["time_ms"] / 1000.0, spikes["neuron_id"], s=1.0, color="black")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("neuron id")
    ax.set_title("Spike raster")
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def reaction_times_from_events(events: list[tuple[float, str]]) -> np.ndarray:
    """Per-episode reaction times: elapsed time from the first pulse of each
    stimulation epoch to the removal that ended it. Epochs with no removal
    (truncated at run end) are dropped."""
    reactions = []
    first_pulse = None
    for time_ms, kind in events:
        if kind == "pulse" and first_pulse is None:
            first_pulse = time_ms
        elif kind == "removal_on" and first_pulse is not None:
            reactions.append(time_ms - first_pulse)
            first_pulse = None
    return np.array(reactions)


def render_reactions(events_path: str | Path, out_path: str | Path) -> Path:
    """Reaction-time learning curve: per-episode reaction time vs episode index."""
    reactions = reaction_times_from_events(load_events(events_path))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(np.arange(1, reactions.size + 1), reactions / 1000.0, marker="o",
            markersize=3, linewidth=1.0)
    ax.set_xlabel("episode")
    ax.set_ylabel("reaction time (s)")
    ax.set_title("Reaction time per stimulation episode")
    if reactions.size:
        ax.set_ylim(bottom=0.0)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
