"""Command-line interface.

    skyhaul simulate --config FILE --experiment users|happower --out CSV
                     [--seed N] [--solvers a,b,...] [--timing]
    skyhaul validate --config FILE
    skyhaul report --in CSV

Exit codes: 0 success, 1 validation/usage failure, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ScenarioValidationError, SkyhaulError
from .harness import emit_csv, read_csv, report_text, run_experiment, spec_from_config
from .model import generate_scenario, validate_scenario
from .optimize import SolverTag


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="skyhaul", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment sweep and write a CSV")
    sim.add_argument("--config", required=True, help="config file path")
    sim.add_argument("--experiment", required=True, choices=["users", "happower"])
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seed", type=int, default=None,
                     help="run a single seed instead of the configured list")
    sim.add_argument("--solvers", default=None,
                     help="comma list from approx,lowcomplexity,bench1,bench2")
    sim.add_argument("--timing", action="store_true",
                     help="record wall-clock times in the CSV (breaks byte-identity)")

    val = sub.add_parser("validate", help="check a config and its generated scenario")
    val.add_argument("--config", required=True)

    rep = sub.add_parser("report", help="summarize a results CSV")
    rep.add_argument("--in", dest="input", required=True, help="input CSV path")
    return parser


def _parse_solvers(arg: str) -> tuple[SolverTag, ...]:
    byname = {t.value: t for t in SolverTag}
    tags = []
    for name in arg.split(","):
        key = name.strip().lower()
        if key not in byname:
            raise ScenarioValidationError(
                f"unknown solver {name!r}; choose from {sorted(byname)}")
        tags.append(byname[key])
    return tuple(tags)


def _cmd_simulate(args) -> int:
    app = load_config(args.config)
    seeds = (args.seed,) if args.seed is not None else None
    solvers = _parse_solvers(args.solvers) if args.solvers else None
    spec = spec_from_config(app, kind=args.experiment, seeds=seeds, solvers=solvers)
    rows = run_experiment(spec)
    emit_csv(rows, args.out, include_timing=args.timing)
    failures = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {args.out}"
          + (f" ({failures} failed solves marked NaN)" if failures else ""))
    return 0


def _cmd_validate(args) -> int:
    app = load_config(args.config)
    scenario = generate_scenario(app.scenario)
    problems = validate_scenario(scenario)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return 1
    print(f"ok: {len(scenario.users)} users, {len(scenario.stations)} stations, "
          f"{len(scenario.gateways)} gateways")
    return 0


def _cmd_report(args) -> int:
    rows = read_csv(args.input)
    sys.stdout.write(report_text(rows))
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_report(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except ScenarioValidationError as exc:
        for p in exc.violations:
            print(f"error: {p}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SkyhaulError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
