"""Giant-tour solution model over an expanded graph with duplicated depots.

A tour is one permutation of all tourable expanded nodes that starts at a
depot copy. Each depot copy resets the elapsed time to zero and opens a new
path, so the permutation induces an ordered list of depot-to-depot paths.
The first m paths carry the team objective; later paths stage fragments and
are ranked lexicographically by the hierarchic score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import total_ordering

import numpy as np

from ._jit import njit
from .instances import Instance


class InfeasibleTourError(ValueError):
    """Operation requires a time-window-feasible tour."""


@dataclass(frozen=True)
class ExpandedGraph:
    """Instance plus one depot copy per tourable customer.

    Expanded indices 0..n_f-1 are the tourable customers in ascending
    original id; indices n_f..2*n_f-1 are the depot copies. Copy-to-copy
    travel time is zero, copy-to-customer equals depot-to-customer.
    """

    base: Instance
    orig_of: np.ndarray      # expanded index -> original node index
    is_depot: np.ndarray     # expanded index -> depot-copy flag
    window_open: np.ndarray
    window_close: np.ndarray
    service: np.ndarray
    prize: np.ndarray
    dist: np.ndarray         # dense expanded-pair travel times

    @property
    def depot_copies(self) -> int:
        return int(self.is_depot.sum())

    @property
    def n_tourable(self) -> int:
        return self.expanded_size - self.depot_copies

    @property
    def expanded_size(self) -> int:
        return self.orig_of.shape[0]

    def first_depot(self) -> int:
        return self.n_tourable


def expand(instance: Instance) -> ExpandedGraph:
    """Build the expanded graph; unreachable customers are left out entirely."""
    tourable = [c.id for c, ok in zip(instance.customers, instance.reachable) if ok]
    n_f = len(tourable)
    n_e = 2 * n_f
    orig_of = np.array(tourable + [0] * n_f, dtype=np.int64)
    is_depot = np.zeros(n_e, dtype=np.bool_)
    is_depot[n_f:] = True
    nodes = instance.nodes
    window_open = np.array([nodes[o].window_open for o in orig_of])
    window_close = np.array([nodes[o].window_close for o in orig_of])
    service = np.array([nodes[o].service_time for o in orig_of])
    prize = np.array([nodes[o].prize for o in orig_of])
    base_dist = instance.distance_matrix if n_f else np.zeros((1, 1))
    dist = base_dist[np.ix_(orig_of, orig_of)].astype(np.float64) if n_f else np.zeros((0, 0))
    for arr in (orig_of, is_depot, window_open, window_close, service, prize, dist):
        arr.flags.writeable = False
    return ExpandedGraph(
        base=instance,
        orig_of=orig_of,
        is_depot=is_depot,
        window_open=window_open,
        window_close=window_close,
        service=service,
        prize=prize,
        dist=dist,
    )


@dataclass
class GiantTour:
    """A permutation of all expanded nodes with its propagated arrival data.

    Tours are private to their owning worker; model operations never share
    mutable state between tours.
    """

    order: np.ndarray
    arrival: np.ndarray
    path_index: np.ndarray
    feasible: bool

    def copy(self) -> "GiantTour":
        return GiantTour(
            self.order.copy(), self.arrival.copy(), self.path_index.copy(), self.feasible
        )

    def paths(self, graph: ExpandedGraph) -> list[list[int]]:
        """Per-path lists of original customer ids, in visitation order."""
        out = [[] for _ in range(graph.depot_copies)]
        for pos, e in enumerate(self.order):
            if not graph.is_depot[e]:
                out[self.path_index[pos]].append(int(graph.orig_of[e]))
        return out


@njit(cache=True)
def propagate_kernel(order, is_depot, window_open, window_close, service, dist, prize, n_paths):
    """Arrival-time recursion along a giant tour.

    Depot copies reset the elapsed time to zero and open the next path.
    Returns arrivals, per-position path index, feasibility and per-path
    prize sums.
    """
    n = order.shape[0]
    arrival = np.zeros(n)
    path_index = np.zeros(n, dtype=np.int64)
    path_prizes = np.zeros(n_paths)
    feasible = True
    v = 0.0
    path = 0
    prev = order[0]
    for pos in range(1, n):
        nd = order[pos]
        if is_depot[nd]:
            path += 1
            v = 0.0
        else:
            arr = v + service[prev] + dist[prev, nd]
            if arr < window_open[nd]:
                arr = window_open[nd]
            if arr > window_close[nd]:
                feasible = False
            arrival[pos] = arr
            path_prizes[path] += prize[nd]
            v = arr
        path_index[pos] = path
        prev = nd
    return arrival, path_index, feasible, path_prizes


def propagate(order: np.ndarray, graph: ExpandedGraph) -> GiantTour:
    """Fill arrival times for a permutation; infeasibility is a flag, not an error."""
    order = np.ascontiguousarray(order, dtype=np.int64)
    if order.shape[0] != graph.expanded_size:
        raise ValueError("order must visit every expanded node exactly once")
    if graph.expanded_size:
        if not graph.is_depot[order[0]]:
            raise ValueError("tour must start at a depot copy")
        counts = np.bincount(order, minlength=graph.expanded_size)
        if counts.max() != 1:
            raise ValueError("order is not a permutation of the expanded nodes")
        arrival, path_index, feasible, _ = propagate_kernel(
            order,
            graph.is_depot,
            graph.window_open,
            graph.window_close,
            graph.service,
            graph.dist,
            graph.prize,
            max(graph.depot_copies, 1),
        )
    else:
        arrival = np.zeros(0)
        path_index = np.zeros(0, dtype=np.int64)
        feasible = True
    return GiantTour(order, arrival, path_index, feasible)


def path_prizes(tour: GiantTour, graph: ExpandedGraph) -> np.ndarray:
    """Prize collected by each path, in visitation order."""
    n_paths = max(graph.depot_copies, 1)
    out = np.zeros(n_paths)
    for pos, e in enumerate(tour.order):
        if not graph.is_depot[e]:
            out[tour.path_index[pos]] += graph.prize[e]
    return out


@total_ordering
@dataclass(frozen=True)
class HierarchicScore:
    """Lexicographic tour value: team prize first, then the staged paths.

    Equivalent to weighting path k > m by M^(m-k) for any M above the
    single-path optimum, without the big-M arithmetic. Trailing zero tail
    entries are trimmed so that structurally equal scores compare equal.
    """

    main_prize: float
    tail_prizes: tuple[float, ...] = ()

    def __post_init__(self):
        tails = self.tail_prizes
        cut = len(tails)
        while cut and tails[cut - 1] == 0:
            cut -= 1
        object.__setattr__(self, "tail_prizes", tuple(tails[:cut]))

    def _key(self):
        return (self.main_prize, self.tail_prizes)

    def __eq__(self, other):
        return self._key() == other._key()

    def __lt__(self, other):
        return self._key() < other._key()


def compare(a: HierarchicScore, b: HierarchicScore) -> int:
    """Total order on scores: -1, 0 or 1."""
    if a == b:
        return 0
    return 1 if a > b else -1


def score(tour: GiantTour, graph: ExpandedGraph, m: int) -> HierarchicScore:
    """Hierarchic score of a feasible tour for fleet size m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not tour.feasible:
        raise InfeasibleTourError("cannot score an infeasible tour")
    prizes = path_prizes(tour, graph)
    main = float(prizes[:m].sum())
    return HierarchicScore(main, tuple(float(p) for p in prizes[m:]))


@dataclass(frozen=True)
class RouteSet:
    """The first m paths as customer-id routes; the team objective value."""

    routes: tuple[tuple[int, ...], ...]
    total_prize: float


def extract_routes(tour: GiantTour, graph: ExpandedGraph, m: int) -> RouteSet:
    """Routes of the first m paths; total prize equals the score's main prize."""
    if not tour.feasible:
        raise InfeasibleTourError("cannot extract routes from an infeasible tour")
    all_paths = tour.paths(graph)
    routes = tuple(tuple(p) for p in all_paths[:m])
    while len(routes) < m:
        routes += ((),)
    total = sum(graph.base.nodes[c].prize for r in routes for c in r)
    return RouteSet(routes=routes, total_prize=float(total))
