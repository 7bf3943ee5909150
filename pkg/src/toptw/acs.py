"""Ant colony system over the giant-tour model.

Ants build complete giant tours one node at a time, guided by pheromone
trails and a prize/travel/window desirability, consuming trail locally as
they move. Each constructed tour is taken to a local optimum by the CROSS
descent, and once per generation the best-so-far solution deposits trail on
its arcs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._jit import njit, seed_kernels
from .instances import Instance
from .local_search import (
    ChainLengthState,
    LocalSearchParams,
    descend_kernel,
    update_schedule,
)
from .model import (
    ExpandedGraph,
    GiantTour,
    HierarchicScore,
    expand,
    extract_routes,
    propagate,
    score,
)
from .reporting import RunReport


@dataclass
class PheromoneMatrix:
    """Dense directed trail levels over expanded-node pairs; entries stay > 0."""

    tau: np.ndarray
    tau0: float


@dataclass(frozen=True)
class AcsParams:
    """All solver tunables, preset to the published defaults.

    nhat is the expected number of probabilistic choices per construction;
    the exploitation probability is q0 = 1 - nhat/n for n tourable expanded
    nodes (clamped to [0, 1] when nhat exceeds n). stop_prize and
    max_generations are optional extra cutoffs used by the harness; the wall
    clock limit always applies.
    """

    m: int
    time_limit: float = 60.0
    seed: int = 0
    rho: float = 0.1
    psi: float = 0.1
    n_ants: int = 10
    nhat: float = 15.0
    ls: LocalSearchParams = field(default_factory=LocalSearchParams)
    stop_prize: float | None = None
    max_generations: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie strictly between 0 and 1")
        if not 0 < self.psi < 1:
            raise ValueError("psi must lie strictly between 0 and 1")
        if self.n_ants < 1:
            raise ValueError("n_ants must be at least 1")
        if self.nhat < 0:
            raise ValueError("nhat must be non-negative")


@dataclass
class BestRecord:
    """Best locally-optimized tour so far, under hierarchic comparison."""

    tour: GiantTour
    score: HierarchicScore
    main_prize_best: float
    found_at: float
    generation: int


@njit(cache=True)
def _eta(prize_j, t_ij, open_j, close_j, ref):
    """Desirability of arc (i, j); ref is v_i + s_i, the earliest departure."""
    lead = open_j - ref
    if t_ij > lead:
        lead = t_ij
    slack = close_j - ref - t_ij
    return prize_j / (lead * slack + 1.0)


def desirability(graph: ExpandedGraph, i: int, j: int, v_i: float) -> float:
    """Attractiveness of moving from i to j when arriving at i at v_i.

    Assumes j is reachable within its window from that state; depot copies
    carry prize 0 and so are never attractive (they are only ever forced).
    """
    return float(
        _eta(
            graph.prize[j],
            graph.dist[i, j],
            graph.window_open[j],
            graph.window_close[j],
            v_i + graph.service[i],
        )
    )


@njit(cache=True)
def construct_kernel(tau, q0, apply_local, psi, tau0, is_depot, wo, wc, sv, pz, dist,
                     n_customers):
    """Build one feasible giant tour; O(n^2) over the expanded size.

    At each step the feasible, unvisited customers form the candidate set;
    with probability q0 the highest tau*eta candidate is taken (ties to the
    lowest index), otherwise sampling is proportional to tau*eta. When no
    customer fits, the lowest unused depot copy closes the path. Every
    traversed arc gets the local pheromone update when apply_local is set.
    """
    n = tau.shape[0]
    order = np.empty(n, np.int64)
    visited = np.zeros(n, np.bool_)
    cand = np.empty(n_customers, np.int64)
    weight = np.empty(n_customers)
    cur = n_customers  # first depot copy
    next_copy = cur + 1
    order[0] = cur
    visited[cur] = True
    v = 0.0
    for pos in range(1, n):
        base = v + sv[cur]
        k = 0
        wsum = 0.0
        for c in range(n_customers):
            if visited[c]:
                continue
            arr = base + dist[cur, c]
            if arr < wo[c]:
                arr = wo[c]
            if arr > wc[c]:
                continue
            w = tau[cur, c] * _eta(pz[c], dist[cur, c], wo[c], wc[c], base)
            cand[k] = c
            weight[k] = w
            wsum += w
            k += 1
        if k == 0:
            nxt = next_copy
            next_copy += 1
            arr = 0.0
        else:
            if np.random.random() < q0:
                bi = 0
                bw = weight[0]
                for ii in range(1, k):
                    if weight[ii] > bw:
                        bw = weight[ii]
                        bi = ii
                choice = bi
            elif wsum <= 0.0:
                choice = int(np.random.random() * k)
                if choice >= k:
                    choice = k - 1
            else:
                r = np.random.random() * wsum
                acc = 0.0
                choice = k - 1
                for ii in range(k):
                    acc += weight[ii]
                    if r < acc:
                        choice = ii
                        break
            nxt = cand[choice]
            arr = base + dist[cur, nxt]
            if arr < wo[nxt]:
                arr = wo[nxt]
        if apply_local:
            tau[cur, nxt] = (1.0 - psi) * tau[cur, nxt] + psi * tau0
        order[pos] = nxt
        visited[nxt] = True
        cur = nxt
        v = arr
    return order


def _q0(params: AcsParams, graph: ExpandedGraph) -> float:
    n = graph.expanded_size
    if n == 0:
        return 1.0
    return max(0.0, 1.0 - params.nhat / n)


def construct(
    graph: ExpandedGraph,
    pheromone: PheromoneMatrix,
    params: AcsParams,
    rng: int | None = None,
) -> GiantTour:
    """Run one ant; the local update mutates the pheromone matrix in place."""
    if rng is not None:
        seed_kernels(rng)
    if graph.expanded_size == 0:
        return propagate(np.zeros(0, dtype=np.int64), graph)
    order = construct_kernel(
        pheromone.tau,
        _q0(params, graph),
        True,
        params.psi,
        pheromone.tau0,
        graph.is_depot,
        graph.window_open,
        graph.window_close,
        graph.service,
        graph.prize,
        graph.dist,
        graph.n_tourable,
    )
    return propagate(order, graph)


def init_pheromone(
    graph: ExpandedGraph, params: AcsParams, rng: int | None = None
) -> tuple[PheromoneMatrix, float]:
    """Set all trails to tau0 = 1/(profit_first * n).

    profit_first is the best first-m prize over one colony generation run on
    uniform trails with no pheromone updates; if it is zero the fallback
    tau0 = 1/n keeps trails positive.
    """
    if rng is not None:
        seed_kernels(rng)
    n = graph.expanded_size
    if n == 0:
        return PheromoneMatrix(np.zeros((0, 0)), 1.0), 0.0
    uniform = np.ones((n, n))
    profit_first = 0.0
    for _ in range(params.n_ants):
        order = construct_kernel(
            uniform,
            _q0(params, graph),
            False,
            params.psi,
            1.0,
            graph.is_depot,
            graph.window_open,
            graph.window_close,
            graph.service,
            graph.prize,
            graph.dist,
            graph.n_tourable,
        )
        tour = propagate(order, graph)
        profit_first = max(profit_first, score(tour, graph, params.m).main_prize)
    tau0 = 1.0 / (profit_first * n) if profit_first > 0 else 1.0 / n
    return PheromoneMatrix(np.full((n, n), tau0), tau0), profit_first


def global_update(
    pheromone: PheromoneMatrix, best: BestRecord, params: AcsParams
) -> None:
    """Deposit trail along the best-so-far tour's arcs (only that ant deposits)."""
    order = best.tour.order
    if order.shape[0] < 2:
        return
    rho = params.rho
    src, dst = order[:-1], order[1:]
    pheromone.tau[src, dst] = (1.0 - rho) * pheromone.tau[src, dst] + rho * best.main_prize_best


def _empty_best(graph: ExpandedGraph) -> BestRecord:
    tour = propagate(np.zeros(0, dtype=np.int64), graph)
    return BestRecord(tour, HierarchicScore(0.0), 0.0, 0.0, 0)


def solve(instance: Instance, params: AcsParams) -> tuple[BestRecord, RunReport]:
    """Full run: generations of construct + descend until the time limit.

    The wall clock is checked between generations, so the limit can be
    overshot by at most one generation.
    """
    t_start = time.perf_counter()
    graph = expand(instance)
    seed_kernels(params.seed)
    if graph.expanded_size == 0:
        best = _empty_best(graph)
        report = RunReport(
            instance=instance.name,
            m=params.m,
            seed=params.seed,
            prize=0.0,
            nodes=0,
            found_at_s=0.0,
            elapsed_s=time.perf_counter() - t_start,
            generations=0,
        )
        return best, report

    pheromone, _ = init_pheromone(graph, params)
    state = ChainLengthState(params.ls.ls_init, 0)
    best: BestRecord | None = None
    generation = 0
    while True:
        if generation > 0 and time.perf_counter() - t_start >= params.time_limit:
            break
        if params.max_generations is not None and generation >= params.max_generations:
            break
        improved = False
        for _ in range(params.n_ants):
            order = construct_kernel(
                pheromone.tau,
                _q0(params, graph),
                True,
                params.psi,
                pheromone.tau0,
                graph.is_depot,
                graph.window_open,
                graph.window_close,
                graph.service,
                graph.prize,
                graph.dist,
                graph.n_tourable,
            )
            opt_order = descend_kernel(
                order,
                params.m,
                state.current_max_len,
                params.ls.ni_cap,
                graph.is_depot,
                graph.window_open,
                graph.window_close,
                graph.service,
                graph.prize,
                graph.dist,
                graph.depot_copies,
            )
            tour = propagate(opt_order, graph)
            sc = score(tour, graph, params.m)
            if best is None or sc > best.score:
                best = BestRecord(
                    tour=tour,
                    score=sc,
                    main_prize_best=sc.main_prize,
                    found_at=time.perf_counter() - t_start,
                    generation=generation,
                )
                improved = True
        global_update(pheromone, best, params)
        state = update_schedule(state, improved, params.ls)
        generation += 1
        if params.stop_prize is not None and best.main_prize_best >= params.stop_prize:
            break

    if best is None:
        best = _empty_best(graph)
    routes = extract_routes(best.tour, graph, params.m)
    nodes = sum(len(r) for r in routes.routes)
    report = RunReport(
        instance=instance.name,
        m=params.m,
        seed=params.seed,
        prize=best.main_prize_best,
        nodes=nodes,
        found_at_s=best.found_at,
        elapsed_s=time.perf_counter() - t_start,
        generations=generation,
    )
    return best, report
