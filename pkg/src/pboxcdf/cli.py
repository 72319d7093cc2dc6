"""Command-line front end.

Exit codes: 0 success, 2 unreadable input, 3 infeasible model, 4 timeout.
Warnings go to stderr; results go to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import random
import sys
import warnings
from typing import Optional, Sequence

from .core import cdf_bounds, construct_pbox, interval_to_json
from .domains import ALGEBRAS
from .ecdf import EmptyInputError, ObservationParseError, read_observations, summary_stats, to_staircase
from .inventory import InventoryModel, Pattern, run_benchmark, search_min_cost, write_benchmark_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4

MODELS = tuple(ALGEBRAS)
CURVE_POINTS = 21


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(obj, path):
    with _output(path) as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _fail(code: int, message: str) -> int:
    print(f"pboxcdf: {message}", file=sys.stderr)
    return code


def _csv_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


# -- plot series ---------------------------------------------------------------------

def _grid(a: float, b: float, n: int = CURVE_POINTS) -> list[float]:
    if b == a:
        return [a]
    return [a + (b - a) * k / (n - 1) for k in range(n)]


def bound_series(alg, dom) -> dict:
    """Plot-ready outline of a domain: cdf ranges over its quantile range."""
    a, b = alg.bounds(dom)
    if alg.name == "convex":
        return {"kind": "rectangle", "points": [[a, 0.0], [a, 1.0], [b, 1.0], [b, 0.0]]}
    xs = _grid(a, b)
    if alg.name == "cdf-point":
        return {"kind": "line", "points": [[x, cdf_bounds(dom, x).hi_cdf] for x in xs]}
    rows = [cdf_bounds(dom, x) for x in xs]
    return {
        "kind": "band",
        "upper": [[x, r.hi_cdf] for x, r in zip(xs, rows)],
        "lower": [[x, r.lo_cdf] for x, r in zip(xs, rows)],
    }


# -- commands -------------------------------------------------------------------------

def cmd_construct(args) -> int:
    try:
        obs = read_observations(args.observations)
    except (ObservationParseError, EmptyInputError, UnicodeDecodeError) as exc:
        return _fail(EXIT_INPUT, f"{args.observations}: {exc}")
    except OSError as exc:
        return _fail(EXIT_INPUT, str(exc))
    stairs = to_staircase(obs)
    interval = construct_pbox(stairs)
    if args.format == "csv":
        with _output(args.out) as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["series", "quantile", "cdf"])
            a, b = interval.a, interval.b
            for x in _grid(a, b):
                lo_cdf, hi_cdf = cdf_bounds(interval, x)
                writer.writerow(["upper_bound", x, hi_cdf])
                writer.writerow(["lower_bound", x, lo_cdf])
            if args.emit_staircase:
                for x, f in zip(stairs.quantiles, stairs.cdf):
                    writer.writerow(["staircase", x, f])
        return EXIT_OK
    stats = summary_stats(obs)
    out = interval_to_json(interval)
    out["summary"] = {"distinct": len(obs), "population": obs.population, "mean": stats.mean, "stddev": stats.stddev}
    if args.emit_staircase:
        out["staircase"] = {
            "quantiles": list(stairs.quantiles),
            "cdf": list(stairs.cdf),
            "corners": [[x, f] for x, f in stairs.corners()],
        }
    _emit_json(out, args.out)
    return EXIT_OK


def _load_model(path: str):
    try:
        return InventoryModel.load(path), None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return None, _fail(EXIT_INPUT, f"{path}: {exc}")


def cmd_solve(args) -> int:
    model, code = _load_model(args.model_file)
    if model is None:
        return code
    report = search_min_cost(
        model, ALGEBRAS[args.model], node_limit=args.node_limit, time_limit=args.timeout_s, queue_seed=args.seed
    )
    if report.status == "infeasible":
        return _fail(EXIT_INFEASIBLE, report.message or "model is infeasible")
    _emit_json(report.to_json(), args.out)
    if report.status == "timeout":
        return _fail(EXIT_TIMEOUT, "time limit reached; report is partial")
    if report.status == "incomplete":
        print("pboxcdf: node limit reached; report is partial", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        patterns = [Pattern(p).value for p in _csv_list(args.patterns)]
        horizons = [int(h) for h in _csv_list(args.horizons)]
        models = _csv_list(args.models)
        rows = run_benchmark(patterns, horizons, models, timeout=args.timeout_s, jobs=args.jobs, spread=args.spread)
    except ValueError as exc:
        return _fail(EXIT_INPUT, str(exc))
    if args.format == "json":
        _emit_json([row.__dict__ for row in rows], args.out)
    else:
        with _output(args.out) as fh:
            write_benchmark_csv(rows, fh)
    return EXIT_OK


def _best_plan(alg, plans):
    return min(plans, key=lambda p: (alg.bounds(p.total_cost)[1], alg.bounds(p.total_cost)[0]))


def cmd_compare(args) -> int:
    model, code = _load_model(args.model_file)
    if model is None:
        return code
    out = {}
    for name in MODELS:
        alg = ALGEBRAS[name]
        report = search_min_cost(model, alg, time_limit=args.timeout_s, queue_seed=args.seed)
        if report.status == "infeasible":
            return _fail(EXIT_INFEASIBLE, report.message or "model is infeasible")
        if report.status == "timeout":
            return _fail(EXIT_TIMEOUT, f"time limit reached while solving with {name}")
        plan = _best_plan(alg, report.plans)
        out[name] = {
            "replenishment_range": list(report.replenishment_range),
            "plans": len(report.plans),
            "delta": [list(r) for r in plan.delta],
            "total_cost": alg.to_json(plan.total_cost),
            "holding_cost": alg.to_json(plan.holding_cost),
            "total_cost_series": bound_series(alg, plan.total_cost),
            "holding_cost_series": bound_series(alg, plan.holding_cost),
        }
    _emit_json(out, args.out)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pboxcdf", description="P-box cdf-interval construction and planning.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a p-box cdf-interval from value,frequency observations")
    p.add_argument("observations", help="CSV file of value,frequency records")
    p.add_argument("--emit-staircase", action="store_true", help="include the empirical staircase for plotting")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("solve", help="search minimum-cost plans for a model file")
    p.add_argument("model_file")
    p.add_argument("--model", choices=MODELS, default="pbox", help="domain used for propagation")
    p.add_argument("--timeout-s", type=float, default=None)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="randomize the propagation queue order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="time the P1-P4 demand patterns across horizons and models")
    p.add_argument("--patterns", default="P1,P2,P3,P4")
    p.add_argument("--horizons", default="10,14,18")
    p.add_argument("--models", default=",".join(MODELS))
    p.add_argument("--timeout-s", type=float, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--spread", type=float, default=0.05, help="relative half-width of synthesized demands")
    p.add_argument("--seed", type=int, default=None, help="accepted for symmetry; the benchmark has no randomness")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="solve one model with every domain and emit the answers side by side")
    p.add_argument("model_file")
    p.add_argument("--timeout-s", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"pboxcdf: warning: {message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None:
        random.seed(args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = _show_warning
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
