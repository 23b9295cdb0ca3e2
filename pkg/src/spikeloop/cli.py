"""Command-line surface: run, sweep, analyze, minimal."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import SpikeloopError
from .experiment import (
    ExperimentSpec,
    SweepSpec,
    run_experiment,
    run_minimal_pair,
    run_parameter_sweep,
)
from .io import analyze_outputs, load_spec, write_outputs, write_sweep_outputs
from .plasticity import StdpParams


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikeloop",
        description="Deterministic spiking-network experiments with "
        "closed/open-loop stimulation protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a single experiment from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", required=True)

    sweep = sub.add_parser("sweep", help="run a closed/open (A_LTD, tau_LTD) sweep")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--repeats", type=int, default=None, help="override repeats per cell")
    sweep.add_argument("--seed", type=int, default=None, help="override the base seed")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--out", required=True)

    analyze = sub.add_parser("analyze", help="recompute metrics from emitted tables")
    analyze.add_argument("--in", dest="in_dir", required=True)

    minimal = sub.add_parser(
        "minimal", help="2-neuron minimal case: weight trajectory under alternating spikes"
    )
    minimal.add_argument("--a-ltd", type=float, required=True)
    minimal.add_argument("--tau-ltd", type=float, required=True)
    minimal.add_argument("--a-ltp", type=float, default=1.0)
    minimal.add_argument("--tau-ltp", type=float, default=20.0)
    minimal.add_argument("--dt-p", type=float, required=True,
                         help="pre-to-post spike interval (ms)")
    minimal.add_argument("--dt-d", type=float, required=True,
                         help="post-to-next-pre spike interval (ms)")
    minimal.add_argument("--cycles", type=int, default=100)
    minimal.add_argument("--w0", type=float, default=10.0)
    return parser


def cli_dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "run":
            spec = load_spec(args.config)
            if not isinstance(spec, ExperimentSpec):
                print("run requires a single-run config, got a sweep", file=sys.stderr)
                return 1
            if args.seed is not None:
                spec = replace(spec, seed=args.seed)
            result = run_experiment(spec)
            manifest = write_outputs(result, args.out)
            print(json.dumps({"out": args.out, "files": sorted(manifest["files"])}))
            return 0

        if args.command == "sweep":
            spec = load_spec(args.config)
            if not isinstance(spec, SweepSpec):
                print("sweep requires a sweep config", file=sys.stderr)
                return 1
            if args.repeats is not None:
                spec = replace(spec, repeats=args.repeats)
            if args.seed is not None:
                spec = replace(spec, base=replace(spec.base, seed=args.seed))
            results = run_parameter_sweep(spec, jobs=args.jobs)
            write_sweep_outputs(results, args.out)
            for cell in results:
                print(
                    f"a_ltd={cell.a_ltd:g} tau_ltd={cell.tau_ltd:g} "
                    f"mean_si={cell.mean_si:.6g} integral={cell.stdp_integral:.6g}"
                )
            return 0

        if args.command == "analyze":
            summary = analyze_outputs(args.in_dir)
            print(json.dumps(summary, indent=2))
            return 0

        if args.command == "minimal":
            params = StdpParams(
                a_ltp=args.a_ltp, a_ltd=args.a_ltd,
                tau_ltp=args.tau_ltp, tau_ltd=args.tau_ltd,
            )
            trajectory = run_minimal_pair(
                params, dt_p=args.dt_p, dt_d=args.dt_d, cycles=args.cycles, w0=args.w0
            )
            for cycle, w in enumerate(trajectory):
                print(f"{cycle},{w:.9g}")
            return 0
    except SpikeloopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1

    parser.print_usage(sys.stderr)
    return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
