"""Command line interface: solve one instance, run a suite, validate a solution."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .acs import AcsParams, solve
from .instances import InstanceFormat, load_instance
from .local_search import LocalSearchParams
from .model import expand, extract_routes
from .reporting import (
    SuiteReport,
    aggregate,
    check_solution,
    read_solution,
    write_csv,
    write_solution,
)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, required=True, help="fleet size (paths that score)")
    p.add_argument("--time-limit", type=float, default=60.0, help="seconds per run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nhat", type=float, default=15.0,
                   help="expected probabilistic choices per construction")
    p.add_argument("--rho", type=float, default=0.1, help="global pheromone update rate")
    p.add_argument("--psi", type=float, default=0.1, help="local pheromone update rate")
    p.add_argument("--ants", type=int, default=10, help="colony size per generation")
    p.add_argument("--ls-init", type=int, default=3, help="initial max segment length")
    p.add_argument("--ls-wnd", type=int, default=3, help="stagnation window, generations")
    p.add_argument("--ls-step", type=int, default=2, help="segment length increment")
    p.add_argument("--ni", type=int, default=5, help="max consecutive non-improving moves")


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", required=True, choices=["solomon", "cordeau"])
    p.add_argument("--node-limit", type=int, default=None,
                   help="keep only the first k customers (solomon format)")


def _params(args) -> AcsParams:
    return AcsParams(
        m=args.m,
        time_limit=args.time_limit,
        seed=args.seed,
        rho=args.rho,
        psi=args.psi,
        n_ants=args.ants,
        nhat=args.nhat,
        ls=LocalSearchParams(
            ls_init=args.ls_init, ls_wnd=args.ls_wnd, ls_step=args.ls_step, ni_cap=args.ni
        ),
    )


def _load(path, args):
    fmt = InstanceFormat(args.format)
    return load_instance(path, fmt, node_limit=args.node_limit)


def cmd_solve(args) -> int:
    instance = _load(args.instance, args)
    params = _params(args)
    best, report = solve(instance, params)
    routes = extract_routes(best.tour, expand(instance), params.m)
    print(f"instance {report.instance}  m {report.m}  seed {report.seed}")
    print(
        f"prize {report.prize:.10g}  nodes {report.nodes}  "
        f"found_at {report.found_at_s:.2f}s  elapsed {report.elapsed_s:.2f}s  "
        f"generations {report.generations}"
    )
    for k, route in enumerate(routes.routes, start=1):
        print(f"route {k}: {' '.join(str(c) for c in route)}")
    if args.out:
        write_csv(args.out, [(0, report)], append=True)
    if args.solution_out:
        write_solution(args.solution_out, routes.routes, routes.total_prize)
    return 0


def cmd_suite(args) -> int:
    directory = Path(args.dir)
    files = sorted(directory.glob("*.txt"))
    if not files:
        raise FileNotFoundError(f"no *.txt instances under {directory}")
    rows = []
    aggregates = []
    for path in files:
        try:
            instance = _load(path, args)
            reports = []
            for run in range(args.runs):
                params = replace(_params(args), seed=args.seed + run)
                _, report = solve(instance, params)
                reports.append(report)
                rows.append((run, report))
            aggregates.append(aggregate(instance.name, args.m, reports))
        except Exception as exc:  # keep going; report the failure
            print(f"warning: {path.name}: {exc}", file=sys.stderr)
    suite = SuiteReport(tuple(aggregates))
    print(suite.table())
    write_csv(args.out, rows)
    print(f"per-run rows written to {args.out}")
    return 0


def cmd_validate(args) -> int:
    instance = _load(args.instance, args)
    routes, stated = read_solution(args.solution_out)
    prize, violations = check_solution(instance, routes, stated)
    if violations:
        print(f"violation: {violations[0]}")
        return 1
    print(f"verified prize {prize:.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toptw",
        description="Ant colony solver for team orienteering with time windows",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance")
    p_solve.add_argument("--instance", required=True)
    _add_instance_flags(p_solve)
    _add_solver_flags(p_solve)
    p_solve.add_argument("--out", default=None, help="append a CSV row here")
    p_solve.add_argument("--solution-out", default=None, help="write the best routes here")
    p_solve.set_defaults(fn=cmd_solve)

    p_suite = sub.add_parser("suite", help="run every instance in a directory")
    p_suite.add_argument("--dir", required=True)
    _add_instance_flags(p_suite)
    _add_solver_flags(p_suite)
    p_suite.add_argument("--runs", type=int, default=5, help="seeded runs per instance")
    p_suite.add_argument("--out", default="suite_results.csv", help="per-run CSV path")
    p_suite.set_defaults(fn=cmd_suite)

    p_val = sub.add_parser("validate", help="re-check a solution file")
    p_val.add_argument("--instance", required=True)
    _add_instance_flags(p_val)
    p_val.add_argument("--solution-out", required=True,
                       help="solution file to check (as written by solve)")
    p_val.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "runs", 1) < 1:
        print("error: --runs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
