"""Command-line entry point.

Subcommands: `simulate`, `stability`, and `kinetic` take a config file
(see `phtaxis schema` for the format); `suite` runs a named preset grid.
Exit codes: 0 success, 2 configuration error, 3 blow-up in a run not
flagged as a blow-up study, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .config import config_with, describe_schema, parse_config
from .core import ConfigurationError
from .output import OutputError
from .suite import SUITE_NAMES, execute_run, run_experiment_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4

_MODE_OF_COMMAND = {
    "simulate": "simulate",
    "stability": "stability-report",
    "kinetic": "kinetic-validate",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phtaxis",
        description="Nonlocal reaction-diffusion-taxis simulation and analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_text in (
        ("simulate", "integrate the coupled u/h system"),
        ("stability", "dispersion sweep and instability classification"),
        ("kinetic", "velocity-jump diffusion-limit validation"),
    ):
        p = sub.add_parser(cmd, help=help_text)
        p.add_argument("config", help="path to the run configuration file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (kinetic mode)")
        p.add_argument("--threads", type=int, default=1, help="accepted for symmetry; single runs are sequential")
    p = sub.add_parser("suite", help="run a preset experiment grid")
    p.add_argument("name", choices=SUITE_NAMES)
    p.add_argument("--out", default="suite_out", help="base output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--seed", type=int, help="random seed for kinetic entries")
    sub.add_parser("schema", help="print the config schema with defaults")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "schema":
            print(describe_schema(), end="")
            return EXIT_OK
        if args.command == "suite":
            run_experiment_suite(args.name, args.out, threads=args.threads)
            print(f"suite {args.name} written to {args.out}")
            return EXIT_OK

        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        overrides = {"mode": _MODE_OF_COMMAND[args.command]}
        if args.out is not None:
            overrides["directory"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = config_with(cfg, **overrides)
        summary = execute_run(cfg, cfg.directory)
        if summary["mode"] == "simulate":
            if summary["blow_up_time"] is not None:
                print(f"blow-up recorded at t = {summary['blow_up_time']:.6g}")
                if not summary["flagged_study"]:
                    return EXIT_BLOWUP
            else:
                print(f"completed to t = {summary['final_time']:.6g}")
        elif summary["mode"] == "stability-report":
            print(f"verdict: {summary['verdict']}")
        else:
            print(f"diffusion-limit L1 error: {summary['l1_error']:.4g}")
        return EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
