"""Command-line entry point: one subcommand per figure kind."""

from __future__ import annotations

import argparse
import sys

from .render import (
    render_evolution,
    render_heatmaps,
    render_kernel,
    render_raster,
    render_reactions,
)
from .tables import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikefig",
        description="Render figures from simulator output tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    evolution = sub.add_parser(
        "evolution", help="closed/open weight time evolution with error bands"
    )
    evolution.add_argument("--closed", required=True, help="closed-loop weights table")
    evolution.add_argument("--open", required=True, dest="open_", help="open-loop weights table")
    evolution.add_argument("--out", required=True, help="output image path")
    evolution.add_argument("--title", default="Mean input-connection weight")

    heatmaps = sub.add_parser(
        "heatmaps", help="selection-indicator and kernel-integral heatmaps"
    )
    heatmaps.add_argument("--sweep", required=True, help="sweep summary table")
    heatmaps.add_argument("--out", required=True)

    kernel = sub.add_parser("kernel", help="plasticity kernel curves")
    kernel.add_argument(
        "--params",
        action="append",
        required=True,
        metavar="A_LTP,A_LTD,TAU_LTP,TAU_LTD",
        help="kernel parameters; repeat for multiple curves",
    )
    kernel.add_argument("--span-ms", type=float, default=100.0)
    kernel.add_argument("--out", required=True)

    raster = sub.add_parser("raster", help="spike raster")
    raster.add_argument("--spikes", required=True, help="spikes table")
    raster.add_argument("--out", required=True)

    reactions = sub.add_parser("reactions", help="reaction time per episode")
    reactions.add_argument("--events", required=True, help="events table")
    reactions.add_argument("--out", required=True)

    return parser


def _parse_params(raw: str) -> tuple[float, float, float, float]:
    parts = raw.split(",")
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated values, got {raw!r}")
    a_ltp, a_ltd, tau_ltp, tau_ltd = (float(p) for p in parts)
    return a_ltp, a_ltd, tau_ltp, tau_ltd


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "evolution":
            out = render_evolution(args.closed, args.open_, args.out, title=args.title)
        elif args.command == "heatmaps":
            out = render_heatmaps(args.sweep, args.out)
        elif args.command == "kernel":
            parameter_sets = [_parse_params(raw) for raw in args.params]
            out = render_kernel(parameter_sets, args.out, span_ms=args.span_ms)
        elif args.command == "raster":
            out = render_raster(args.spikes, args.out)
        else:
            out = render_reactions(args.events, args.out)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
