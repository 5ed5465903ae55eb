"""Command line entry point: ``cournot --scenario s.json --out reports/``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ParseError, ValidationError
from .scenario import EXIT_CONFIG, RunOptions, override_seeds, parse_scenario, run_scenario


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cournot",
        description="Run C-class, C-measure and governance checks described by a JSON scenario.",
    )
    parser.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    parser.add_argument("--out", type=Path, default=None,
                        help="report directory (default: scenario 'output.dir' or ./reports)")
    parser.add_argument("--fail-fast", action="store_true", help="stop at the first failed task")
    parser.add_argument("--seed-override", type=_u64, default=None,
                        help="re-seed every experiment from this root seed")
    parser.add_argument("--tol", type=float, default=None, help="bisection tolerance for C-measures")
    parser.add_argument("--horizon", type=int, default=None,
                        help="finite horizon for the 'definitively in C' predicate")
    parser.add_argument("--parallel", action="store_true", help="run independent tasks concurrently")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.tol is not None and args.tol <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if args.horizon is not None and args.horizon < 2:
        print("error: --horizon must be >= 2", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenario = parse_scenario(args.scenario.read_text())
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError) as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed_override is not None:
        scenario = override_seeds(scenario, args.seed_override)
    out = args.out or Path(scenario.output.get("dir", "reports"))
    opts = RunOptions(out, args.fail_fast, args.tol, args.horizon, args.parallel)
    code = run_scenario(scenario, opts)
    print(f"{len(scenario.tasks)} task(s), reports in {out}, exit {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
