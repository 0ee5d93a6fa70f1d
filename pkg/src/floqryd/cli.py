"""Command-line front end.

    floqryd run <scenario.json> [--out DIR] [--threads N] [--seed S]
    floqryd list
    floqryd validate <scenario.json>

Exit codes: 0 success, 2 scenario validation failure (the message names the
offending keys), 3 numerical failure during a run.  FLOQRYD_THREADS sets
the default worker count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .scenario import (
    NumericalFailureError,
    ScenarioValidationError,
    list_scenarios,
    load_scenario,
    run_scenario,
)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("FLOQRYD_THREADS", "1")))
    except ValueError:
        return 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floqryd", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario file")
    run_p.add_argument("scenario", help="path to a scenario JSON file")
    run_p.add_argument("--out", default="out", help="output root directory (default: out)")
    run_p.add_argument("--threads", type=int, default=_default_threads(), help="worker count")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    sub.add_parser("list", help="print the bundled scenario catalog")

    val_p = sub.add_parser("validate", help="validate a scenario file without running it")
    val_p.add_argument("scenario", help="path to a scenario JSON file")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "list":
        rows = list_scenarios()
        widths = (
            max(len(r["name"]) for r in rows),
            max(len(str(r["figure"])) for r in rows),
            max(len(r["kind"]) for r in rows),
        )
        print(f"{'name':<{widths[0]}}  {'figure':<{widths[1]}}  {'kind':<{widths[2]}}  budget_s")
        for r in rows:
            print(
                f"{r['name']:<{widths[0]}}  {str(r['figure']):<{widths[1]}}  "
                f"{r['kind']:<{widths[2]}}  {r['runtime_budget_s']}"
            )
        return 0

    if args.command == "validate":
        try:
            load_scenario(args.scenario)
        except FileNotFoundError:
            print(f"error: no such file: {args.scenario}", file=sys.stderr)
            return EXIT_VALIDATION
        except json.JSONDecodeError as exc:
            print(f"error: invalid JSON: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except ScenarioValidationError as exc:
            for p in exc.problems:
                print(f"error: {p}", file=sys.stderr)
            return EXIT_VALIDATION
        print("ok")
        return 0

    # run
    try:
        manifest = run_scenario(args.scenario, args.out, threads=args.threads, seed_override=args.seed)
    except FileNotFoundError:
        print(f"error: no such file: {args.scenario}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScenarioValidationError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailureError as exc:
        where = f" (sample {exc.sample_index})" if exc.sample_index is not None else ""
        print(f"numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {manifest['scenario']} outputs ({manifest['elapsed_s']:.1f} s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
