"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 scenario validation error,
3 numerical invariant breach, 4 acceptance check failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .core import InvariantError, LayoutError
from .harness import NumericalInvariantError, ScenarioError, emit, load_scenario, run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dualmeas", description="Dual-state quantum measurement simulator")
    p.add_argument("--scenario", help="path to a YAML scenario file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--events", type=int, help="override the scenario event count")
    p.add_argument("--out", help="output directory (overrides the scenario)")
    p.add_argument("--format", choices=("json", "csv"), help="event record format")
    p.add_argument(
        "--check", action="store_true", help="run the acceptance property suite and exit"
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.check:
        from .checks import run_all

        return EXIT_OK if run_all(verbose=True) else EXIT_CHECK

    if not args.scenario:
        print("dualmeas: error: --scenario is required unless --check is given", file=sys.stderr)
        return EXIT_USAGE

    try:
        scenario = load_scenario(args.scenario)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.events is not None:
            overrides["n_events"] = args.events
        if args.out is not None:
            overrides["out_path"] = args.out
        if args.format is not None:
            overrides["out_format"] = args.format
        if overrides:
            scenario = replace(scenario, **overrides)
    except FileNotFoundError as e:
        print(f"dualmeas: scenario error: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    except (ScenarioError, InvariantError) as e:
        print(f"dualmeas: scenario error: {e}", file=sys.stderr)
        return EXIT_SCENARIO

    try:
        summary, records = run(scenario)
    except (NumericalInvariantError, InvariantError, LayoutError) as e:
        print(f"dualmeas: numerical invariant breach: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    try:
        paths = emit(summary, records, scenario.out_path, fmt=scenario.out_format)
    except OSError as e:
        print(f"dualmeas: cannot write output: {e}", file=sys.stderr)
        return EXIT_USAGE
    for chk in summary.checks:
        tag = "PASS" if chk["passed"] else "FAIL"
        print(f"[{tag}] {chk['name']} (value: {chk['value']})")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
