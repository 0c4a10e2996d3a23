"""Command line front-end: ``cepnets run <scenario> [--degree D] [--grid N] [--tail T] [--csv-dir DIR]``."""

from __future__ import annotations

import argparse
import sys

from .scenario import ScenarioError, load_scenario, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cepnets",
        description="Classify nets of smooth functions in overgenerated scale algebras.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario", help="path to a TOML scenario")
    run.add_argument("--degree", type=int, help="override the frontier/ideal degree D")
    run.add_argument("--grid", type=int, help="override grid points per axis")
    run.add_argument("--tail", type=int, help="override the tail length")
    run.add_argument("--csv-dir", help="directory for lambda,value series of tasks with csv = true")
    run.add_argument("--no-timing", action="store_true", help="omit elapsed-time lines")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario, degree=args.degree, grid=args.grid, tail=args.tail)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    report = run_scenario(scenario, args.csv_dir)
    sys.stdout.write(report.text(timing=not args.no_timing))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
