"""Benchmark instance files: parsing, validation and derived quantities.

Two plain-text formats are supported: the classic Solomon VRPTW layout
(header, vehicle block, customer table) and the Cordeau periodic-VRP layout
used by the pr01-pr20 series. In both cases the delivery demand of a node is
interpreted as its prize and capacities are ignored.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ParseError(ValueError):
    """Malformed instance file; message names the offending line."""


class InstanceFormat(enum.Enum):
    """Supported benchmark file layouts."""

    SOLOMON = "solomon"
    CORDEAU = "cordeau"


@dataclass(frozen=True)
class Node:
    """One location: index 0 is the unified depot, customers are 1..n."""

    id: int
    x: float
    y: float
    prize: float
    window_open: float
    window_close: float
    service_time: float

    def __post_init__(self):
        if self.window_open > self.window_close:
            raise ValueError(
                f"node {self.id}: window [{self.window_open}, {self.window_close}] is inverted"
            )
        if self.prize < 0:
            raise ValueError(f"node {self.id}: negative prize")
        if self.service_time < 0:
            raise ValueError(f"node {self.id}: negative service time")


@dataclass(frozen=True)
class Instance:
    """Immutable problem data with full-precision Euclidean travel times.

    The depot carries prize 0, service 0 and window [0, horizon], where
    horizon is max(window_close + service + travel back to depot) over all
    customers. Instances are safe to share across workers.
    """

    name: str
    nodes: tuple[Node, ...]
    horizon: float

    @property
    def n_customers(self) -> int:
        return len(self.nodes) - 1

    @property
    def depot(self) -> Node:
        return self.nodes[0]

    @property
    def customers(self) -> tuple[Node, ...]:
        return self.nodes[1:]

    @property
    def total_prize(self) -> float:
        return sum(n.prize for n in self.nodes)

    def travel_time(self, i: int, j: int) -> float:
        """Euclidean travel time between nodes i and j, no rounding."""
        a, b = self.nodes[i], self.nodes[j]
        return math.hypot(a.x - b.x, a.y - b.y)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        xy = np.array([(n.x, n.y) for n in self.nodes])
        d = np.hypot(xy[:, 0:1] - xy[:, 0], xy[:, 1:2] - xy[:, 1])
        d.flags.writeable = False
        return d

    @cached_property
    def reachable(self) -> tuple[bool, ...]:
        """Per-customer flag: the window can be met starting from the depot.

        Unreachable customers stay in the instance but are never toured.
        """
        return tuple(
            self.travel_time(0, c.id) <= c.window_close for c in self.customers
        )

    def to_canonical(self) -> str:
        """Serialize to a canonical text dump; round-trips exactly."""
        payload = {
            "name": self.name,
            "horizon": repr(self.horizon),
            "nodes": [
                [
                    n.id,
                    repr(n.x),
                    repr(n.y),
                    repr(n.prize),
                    repr(n.window_open),
                    repr(n.window_close),
                    repr(n.service_time),
                ]
                for n in self.nodes
            ],
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @staticmethod
    def from_canonical(text: str) -> "Instance":
        payload = json.loads(text)
        nodes = tuple(
            Node(
                id=int(r[0]),
                x=float(r[1]),
                y=float(r[2]),
                prize=float(r[3]),
                window_open=float(r[4]),
                window_close=float(r[5]),
                service_time=float(r[6]),
            )
            for r in payload["nodes"]
        )
        return Instance(payload["name"], nodes, float(payload["horizon"]))


def _compute_horizon(depot_xy: tuple[float, float], customers: list[Node]) -> float:
    """Latest feasible depot arrival: max(b_i + s_i + t_i0), 0 if no customers."""
    dx, dy = depot_xy
    best = 0.0
    for c in customers:
        t_back = math.hypot(c.x - dx, c.y - dy)
        best = max(best, c.window_close + c.service_time + t_back)
    return best


def build_instance(name: str, depot_row, customer_rows) -> Instance:
    """Assemble an Instance from raw (x, y, prize, open, close, service) rows.

    The depot row's prize/service are forced to zero and its window to
    [0, horizon]; customer ids are assigned 1..n in row order.
    """
    dx, dy = float(depot_row[0]), float(depot_row[1])
    customers = [
        Node(
            id=k + 1,
            x=float(r[0]),
            y=float(r[1]),
            prize=float(r[2]),
            window_open=float(r[3]),
            window_close=float(r[4]),
            service_time=float(r[5]),
        )
        for k, r in enumerate(customer_rows)
    ]
    horizon = _compute_horizon((dx, dy), customers)
    depot = Node(0, dx, dy, 0.0, 0.0, horizon, 0.0)
    return Instance(name=name, nodes=(depot,) + tuple(customers), horizon=horizon)


def _numeric_tokens(line: str):
    toks = line.split()
    try:
        return [float(t) for t in toks]
    except ValueError:
        return None


def parse_solomon(text: str, node_limit: int | None = None) -> Instance:
    """Parse a Solomon VRPTW file; demand becomes the prize.

    Customer 0 of the file is the depot. With node_limit=k only the first k
    customers after the depot are kept and the horizon is recomputed over
    them.
    """
    lines = text.splitlines()
    name = ""
    rows = []  # (line_no, values)
    for ln, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if not name:
            name = stripped.split()[0]
            continue
        vals = _numeric_tokens(stripped)
        if vals is None:
            # header words: VEHICLE / CUSTOMER / column captions
            continue
        if len(vals) == 2 and not rows:
            continue  # vehicle count / capacity line
        if len(vals) != 7:
            raise ParseError(f"line {ln}: expected 7 numeric fields, got {len(vals)}")
        rows.append((ln, vals))
    if not name:
        raise ParseError("line 1: missing instance name header")
    if not rows:
        raise ParseError("no customer table found")
    ln0, depot_vals = rows[0]
    if int(depot_vals[0]) != 0:
        raise ParseError(f"line {ln0}: first customer row must have id 0 (depot)")
    customer_rows = rows[1:]
    if node_limit is not None:
        if node_limit > len(customer_rows):
            raise ParseError(
                f"node_limit {node_limit} exceeds the {len(customer_rows)} customers on file"
            )
        customer_rows = customer_rows[:node_limit]
    for ln, vals in customer_rows:
        if vals[4] > vals[5]:
            raise ParseError(f"line {ln}: ready time after due date")
    return build_instance(
        name,
        (depot_vals[1], depot_vals[2]),
        [(v[1], v[2], v[3], v[4], v[5], v[6]) for _, v in customer_rows],
    )


def parse_cordeau(text: str) -> Instance:
    """Parse a Cordeau pr* file (single depot, all customers active).

    Layout: header `type m n t`, then t lines of per-period `D Q` metadata,
    then n customer rows `i x y d q f a c1..ca e l`, then depot row(s); only
    the first depot row is used. Frequency and visit-combination fields are
    read and discarded.
    """
    lines = [(ln, raw.strip()) for ln, raw in enumerate(text.splitlines(), start=1)]
    lines = [(ln, s) for ln, s in lines if s]
    if not lines:
        raise ParseError("empty file")
    ln0, header = lines[0]
    head = _numeric_tokens(header)
    if head is None or len(head) < 4:
        raise ParseError(f"line {ln0}: expected header `type m n t`")
    n_customers = int(head[2])
    n_periods = int(head[3])
    body = lines[1 + n_periods :]
    if len(body) < n_customers + 1:
        raise ParseError(
            f"expected {n_customers} customer rows plus a depot row, found {len(body)}"
        )

    def parse_row(ln, s):
        vals = _numeric_tokens(s)
        if vals is None or len(vals) < 9:
            raise ParseError(f"line {ln}: malformed node row")
        n_combos = int(vals[6])
        want = 9 + n_combos
        if len(vals) != want:
            raise ParseError(
                f"line {ln}: expected {want} fields for {n_combos} visit combinations"
            )
        i, x, y, d, q = vals[0], vals[1], vals[2], vals[3], vals[4]
        e, l = vals[7 + n_combos], vals[8 + n_combos]
        if e > l:
            raise ParseError(f"line {ln}: ready time after due date")
        return int(i), x, y, d, q, e, l

    customer_rows = []
    for ln, s in body[:n_customers]:
        _, x, y, d, q, e, l = parse_row(ln, s)
        customer_rows.append((x, y, q, e, l, d))
    _, dep_x, dep_y, _, _, _, _ = parse_row(*body[n_customers])
    return build_instance("cordeau", (dep_x, dep_y), customer_rows)


_PARSERS = {
    InstanceFormat.SOLOMON: parse_solomon,
    InstanceFormat.CORDEAU: parse_cordeau,
}


def load_instance(
    path, fmt: InstanceFormat, node_limit: int | None = None
) -> Instance:
    """Read and parse a file; the instance is renamed after the file stem."""
    import pathlib

    p = pathlib.Path(path)
    text = p.read_text()
    if fmt is InstanceFormat.SOLOMON:
        inst = parse_solomon(text, node_limit)
    else:
        if node_limit is not None:
            raise ValueError("node_limit is only supported for the solomon format")
        inst = parse_cordeau(text)
    return Instance(p.stem, inst.nodes, inst.horizon)
