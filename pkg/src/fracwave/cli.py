"""Command-line entry point.

    fracwave <experiment> [--config PATH] [--out DIR] [--seed N] [--quiet]

Exit codes: 0 all criteria pass, 1 criterion failure, 2 configuration error,
3 diverged run.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .dynamics import DivergedRunError
from .harness import (
    ConfigError,
    NonlinearRegimeError,
    default_config,
    load_config,
    run_experiment,
)

_COMMANDS = {
    "simulate": "simulate",
    "dissipative": "dissipative",
    "regularity": "regularity",
    "twin": "twin",
    "smoothing": "smoothing",
    "fracops-verify": "fracops_verify",
    "commutator-study": "commutator_study",
    "gronwall": "gronwall",
    "sweep": "sweep",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracwave",
        description="Spectral simulator and verification lab for the fractionally damped wave equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("runs") / name, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the initial-data seed")
        p.add_argument("--quiet", action="store_true", help="suppress the summary printout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    kind = _COMMANDS[args.command]
    try:
        if args.config is not None:
            cfg = load_config(args.config)
            if cfg.experiment != kind:
                cfg = cfg.replace(experiment=kind)
        else:
            cfg = default_config(kind)
        if args.seed is not None:
            cfg = cfg.replace(init=dataclasses.replace(cfg.init, seed=args.seed))
    except (ConfigError, OSError, ValueError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2

    try:
        report = run_experiment(cfg, args.out)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except DivergedRunError as err:
        print(f"diverged run: {err}", file=sys.stderr)
        return 3
    except NonlinearRegimeError as err:
        print(f"criterion failure: {err}", file=sys.stderr)
        return 1

    if not args.quiet:
        for line in report.summary_lines():
            print(line)
        print(f"report: {Path(args.out) / 'report.json'}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
