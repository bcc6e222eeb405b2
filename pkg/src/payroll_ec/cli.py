"""Command-line front end.

Subcommands::

    payroll-ec validate RULES [--mode M]
    payroll-ec run RULES [SCENARIO] [--mode M] [--granularity G] [--horizon H] [--out PATH]
    payroll-ec diff RULES [SCENARIO] [--granularity G]
    payroll-ec bench RULES [SCENARIO] [--granularities 30,15,10,5,1] [--repeat N] [--gen-actions K]
    payroll-ec gen RULES (--actions K | --changepoints N) [--seed S] [--step G]

``RULES`` is a table document; if it contains a ``user_actions`` table that is
the default scenario, and an explicit ``SCENARIO`` document replaces it.

Exit codes: 0 ok, 1 engines diverge, 2 parse error, 3 validation error,
4 inconsistent scenario, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from statistics import mean

from .errors import (CycleError, EvaluationError, InconsistencyError, NonStratifiableError, ParseError,
                     PayrollError, RangeError, UnknownNameError, ValidationError)
from .generate import alternating_scenario, scenario_for_changepoints
from .ingest import parse_document, parse_scenario, render_scenario
from .model import DEFAULT_HORIZON, Ruleset, Scenario, validate_ruleset, validate_scenario
from .report import diff, run

EXIT_OK, EXIT_DIVERGE, EXIT_PARSE, EXIT_INVALID, EXIT_INCONSISTENT, EXIT_IO = 0, 1, 2, 3, 4, 5

BENCH_HEADER = ("mode", "granularity", "timepoints", "changepoints", "wall_ms", "steps")


class _IOFailure(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def _parse(fn, path: str, **kw):
    text = _read(path)
    try:
        return fn(text, **kw)
    except ParseError as exc:
        exc.path = path
        raise


def _load(args) -> tuple[Ruleset, Scenario]:
    horizon = getattr(args, "horizon", None) or DEFAULT_HORIZON
    rs, sc = _parse(parse_document, args.rules, horizon=horizon)
    if getattr(args, "scenario", None):
        sc = _parse(parse_scenario, args.scenario)
    return rs, sc


def _granularities(text: str) -> list[int]:
    try:
        gs = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not gs or any(g < 1 for g in gs):
        raise argparse.ArgumentTypeError("granularities must be positive")
    return gs


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    rs, sc = _load(args)
    rep = validate_ruleset(rs, args.mode)
    for v in validate_scenario(rs, sc):
        rep.add(v.code, v.message, *v.subjects)
    if rep.ok:
        print(f"ok: {len(rs.fluents)} fluents, {len(rs.actions)} actions, "
              f"{len(sc.user_actions)} scheduled user actions")
        return EXIT_OK
    for v in rep:
        print(f"{v.code}: {v.message}")
    return EXIT_INVALID


def cmd_run(args) -> int:
    rs, sc = _load(args)
    report = run(rs, sc, args.mode, args.granularity)
    text = json.dumps(report.to_dict(timing=not args.no_timing), indent=2) + "\n"
    _write(args.out, text)
    if args.out and args.out != "-":
        print(f"total wage {report.total} written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_diff(args) -> int:
    rs, sc = _load(args)
    result = diff(rs, sc, args.granularity)
    print(result)
    return EXIT_OK if result.equivalent else EXIT_DIVERGE


def bench_rows(rs: Ruleset, sc: Scenario, granularities, repeat: int = 5, average: bool = True):
    """Benchmark rows in ``BENCH_HEADER`` order.

    ``changepoints`` counts distinct ticks at which some action happened, so it
    is comparable between the two modes.  With ``average`` the ``repeat``
    repetitions of each (mode, granularity) are folded into one row whose
    ``wall_ms`` is their mean.
    """
    rows = []
    for mode in ("single", "changepoint"):
        for g in granularities:
            reps = []
            for _ in range(repeat):
                rep = run(rs, sc, mode, g)
                cps = len({t for _, t in rep.happenings})
                reps.append((mode, g, rs.horizon // g + 1, cps, rep.wall_ms, rep.steps))
            if average and repeat > 1:
                first = reps[0]
                rows.append((*first[:4], mean(r[4] for r in reps), first[5]))
            else:
                rows.extend(reps)
    return rows


def cmd_bench(args) -> int:
    rs, sc = _load(args)
    if args.gen_actions is not None:
        step = math.lcm(*args.granularities)
        sc = alternating_scenario(rs, args.gen_actions, args.seed, step)
    rows = bench_rows(rs, sc, args.granularities, args.repeat, not args.raw)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in rows:
        w.writerow((*r[:4], f"{r[4]:.3f}", r[5]))
    return EXIT_OK


def cmd_gen(args) -> int:
    rs, _ = _load(args)
    if args.changepoints is not None:
        sc, got = scenario_for_changepoints(rs, args.changepoints, args.seed, args.step)
        print(f"changepoint run advances {got} times", file=sys.stderr)
    else:
        sc = alternating_scenario(rs, args.actions, args.seed, args.step)
    _write(args.out, render_scenario(sc))
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="payroll-ec", description="Evaluate table-authored payroll rules.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=True, horizon=True):
        p.add_argument("rules", help="table document with the ruleset")
        if scenario:
            p.add_argument("scenario", nargs="?", help="document with a user_actions table")
        if horizon:
            p.add_argument("--horizon", type=_positive, default=None,
                           help=f"last minute of the scenario (default {DEFAULT_HORIZON})")

    p = sub.add_parser("validate", help="check a ruleset for the chosen engine")
    common(p)
    p.add_argument("--mode", choices=("single", "changepoint"), default="changepoint")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="evaluate a scenario and print a JSON trace report")
    common(p)
    p.add_argument("--mode", choices=("single", "changepoint"), default="single")
    p.add_argument("--granularity", "-g", type=_positive, default=1)
    p.add_argument("--out", "-o", help="write the report here instead of stdout")
    p.add_argument("--no-timing", action="store_true", help="omit wall_ms for reproducible output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diff", help="compare both engines on one scenario")
    common(p)
    p.add_argument("--granularity", "-g", type=_positive, default=1)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("bench", help="time both engines, CSV on stdout")
    common(p)
    p.add_argument("--granularities", type=_granularities, default=[30, 15, 10, 5, 1])
    p.add_argument("--repeat", type=_positive, default=5)
    p.add_argument("--raw", action="store_true", help="one row per repetition")
    p.add_argument("--gen-actions", type=int, metavar="K",
                   help="replace the scenario with K generated user actions")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate a random scenario document")
    common(p, scenario=False)
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--actions", type=int, metavar="K")
    what.add_argument("--changepoints", type=int, metavar="N",
                      help="aim for at most N changepoint advances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=_positive, default=1, help="generated times are multiples of this")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParseError as exc:
        where = getattr(exc, "path", "<input>")
        print(f"{where}:{exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, CycleError, NonStratifiableError, RangeError, UnknownNameError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InconsistencyError, EvaluationError) as exc:
        print(f"inconsistent: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except PayrollError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
