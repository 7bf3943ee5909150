"""Run reports, suite aggregation, CSV emission and solution-file checking."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .instances import Instance

CSV_COLUMNS = (
    "instance",
    "m",
    "run",
    "seed",
    "prize",
    "nodes",
    "found_at_s",
    "elapsed_s",
    "generations",
)


@dataclass(frozen=True)
class RunReport:
    """One solver run. found_at_s, elapsed_s and generations depend on the
    wall clock; everything else is seed-deterministic."""

    instance: str
    m: int
    seed: int
    prize: float
    nodes: int
    found_at_s: float
    elapsed_s: float
    generations: int

    def csv_row(self, run: int) -> list[str]:
        return [
            self.instance,
            str(self.m),
            str(run),
            str(self.seed),
            format(self.prize, ".10g"),
            str(self.nodes),
            format(round(self.found_at_s, 3), ".3f"),
            format(round(self.elapsed_s, 3), ".3f"),
            str(self.generations),
        ]


def write_csv(path, rows: list[tuple[int, RunReport]], append: bool = False) -> None:
    """Write (run index, report) rows under the stable header."""
    p = Path(path)
    exists = p.exists() and p.stat().st_size > 0
    mode = "a" if append else "w"
    with open(p, mode, newline="") as fh:
        writer = csv.writer(fh)
        if not (append and exists):
            writer.writerow(CSV_COLUMNS)
        for run, report in rows:
            writer.writerow(report.csv_row(run))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


@dataclass(frozen=True)
class InstanceAggregate:
    """Per-instance statistics over r seeded runs."""

    instance: str
    m: int
    runs: int
    prize_min: float
    prize_avg: float
    prize_max: float
    best_nodes: int
    time_min: float
    time_avg: float
    time_max: float


@dataclass(frozen=True)
class SuiteReport:
    rows: tuple[InstanceAggregate, ...]

    def table(self) -> str:
        header = (
            f"{'instance':<16}{'m':>3}{'runs':>6}"
            f"{'min':>10}{'avg':>10}{'max':>10}{'(nodes)':>9}"
            f"{'t_min':>10}{'t_avg':>10}{'t_max':>10}"
        )
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.instance:<16}{r.m:>3}{r.runs:>6}"
                f"{r.prize_min:>10.10g}{r.prize_avg:>10.1f}{r.prize_max:>10.10g}"
                f"{'(' + str(r.best_nodes) + ')':>9}"
                f"{r.time_min:>10.3f}{r.time_avg:>10.3f}{r.time_max:>10.3f}"
            )
        return "\n".join(lines)


def aggregate(instance: str, m: int, reports: list[RunReport]) -> InstanceAggregate:
    """min/avg/max prize and time-to-best over runs; node count of the best run.

    Times are aggregated at the millisecond resolution the CSV stores, so the
    table can be reproduced exactly from the emitted rows.
    """
    if not reports:
        raise ValueError("no runs to aggregate")
    prizes = [r.prize for r in reports]
    times = [round(r.found_at_s, 3) for r in reports]
    best = max(reports, key=lambda r: r.prize)
    return InstanceAggregate(
        instance=instance,
        m=m,
        runs=len(reports),
        prize_min=min(prizes),
        prize_avg=sum(prizes) / len(prizes),
        prize_max=max(prizes),
        best_nodes=best.nodes,
        time_min=min(times),
        time_avg=sum(times) / len(times),
        time_max=max(times),
    )


def write_solution(path, routes, prize: float) -> None:
    """Plain-text solution: one route per line of original customer ids,
    prize on a trailing comment line."""
    lines = [" ".join(str(c) for c in route) for route in routes]
    lines.append(f"# prize {format(prize, '.10g')}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_solution(path) -> tuple[list[list[int]], float | None]:
    routes: list[list[int]] = []
    stated: float | None = None
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line.startswith("#"):
            toks = line[1:].split()
            if len(toks) == 2 and toks[0] == "prize":
                stated = float(toks[1])
            continue
        routes.append([int(t) for t in line.split()] if line else [])
    return routes, stated


def check_solution(
    instance: Instance, routes: list[list[int]], stated_prize: float | None = None
) -> tuple[float, list[str]]:
    """Re-propagate a route listing against the instance.

    Returns the recomputed prize and the violations in discovery order
    (window misses, repeated or unknown customers, prize mismatch).
    """
    violations: list[str] = []
    seen: set[int] = set()
    prize = 0.0
    for ri, route in enumerate(routes, start=1):
        v = 0.0
        prev = 0
        for c in route:
            if not 1 <= c <= instance.n_customers:
                violations.append(f"route {ri}: unknown customer {c}")
                continue
            if c in seen:
                violations.append(f"route {ri}: customer {c} visited twice")
            seen.add(c)
            node = instance.nodes[c]
            arr = max(v + instance.nodes[prev].service_time + instance.travel_time(prev, c),
                      node.window_open)
            if arr > node.window_close:
                violations.append(
                    f"route {ri}: late arrival at customer {c} "
                    f"({arr:.3f} > {node.window_close:.10g})"
                )
            prize += node.prize
            v = arr
            prev = c
    if stated_prize is not None and not math.isclose(prize, stated_prize, rel_tol=0, abs_tol=1e-9):
        violations.append(
            f"stated prize {stated_prize:.10g} differs from recomputed {prize:.10g}"
        )
    return prize, violations
