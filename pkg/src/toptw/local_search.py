"""CROSS-exchange local search on the giant tour.

Moves swap two order-preserving segments (one may be empty, giving a plain
relocation); segments may contain depot copies, so one move can split, merge
or rebalance paths. The descent takes first-improving moves over randomly
ordered anchors and, when a scan finds none, accepts the best feasible
non-improving move, up to a cap of consecutive non-improving acceptances.

The scan evaluates candidates incrementally (prefix tables, early-exit
walks) but is observably equivalent to applying each move and re-propagating
from scratch; the tests enforce that equivalence exhaustively on small
instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .model import (
    ExpandedGraph,
    GiantTour,
    HierarchicScore,
    propagate,
    propagate_kernel,
    score,
)


@dataclass(frozen=True)
class LocalSearchParams:
    """Neighborhood controls; defaults follow the robust published setting."""

    ls_init: int = 3
    ls_wnd: int = 3
    ls_step: int = 2
    ni_cap: int = 5

    def __post_init__(self):
        for name in ("ls_init", "ls_wnd", "ls_step", "ni_cap"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer")


@dataclass(frozen=True)
class ChainLengthState:
    """Adaptive max segment length, widened after stagnant generations."""

    current_max_len: int
    generations_since_improvement: int = 0


def update_schedule(
    state: ChainLengthState, improved_this_generation: bool, params: LocalSearchParams
) -> ChainLengthState:
    """Advance the chain-length schedule by one generation."""
    if improved_this_generation:
        return ChainLengthState(state.current_max_len, 0)
    count = state.generations_since_improvement + 1
    if count >= params.ls_wnd:
        return ChainLengthState(state.current_max_len + params.ls_step, 0)
    return ChainLengthState(state.current_max_len, count)


@dataclass(frozen=True)
class CrossMove:
    """Swap order[first_start:first_start+first_len] with the second range.

    Ranges must not overlap, must not both be empty, and must not touch
    position 0 (the fixed leading depot copy). Neither segment is reversed.
    """

    first_start: int
    first_len: int
    second_start: int
    second_len: int


def _normalize_move(move: CrossMove, n: int) -> tuple[int, int, int, int]:
    i, l1, j, l2 = move.first_start, move.first_len, move.second_start, move.second_len
    if l1 < 0 or l2 < 0:
        raise ValueError("segment lengths must be non-negative")
    if l1 == 0 and l2 == 0:
        raise ValueError("both segments are empty")
    if j < i:
        i, l1, j, l2 = j, l2, i, l1
    if i < 1:
        raise ValueError("moves cannot touch position 0 (leading depot copy)")
    if j + l2 > n:
        raise ValueError("second segment runs past the end of the tour")
    if i + l1 > j:
        raise ValueError("segments overlap")
    return i, l1, j, l2


def spliced_order(order: np.ndarray, i: int, l1: int, j: int, l2: int) -> np.ndarray:
    """New visit order after exchanging ranges [i, i+l1) and [j, j+l2)."""
    return np.concatenate(
        (order[:i], order[j : j + l2], order[i + l1 : j], order[i : i + l1], order[j + l2 :])
    )


def apply_move(
    tour: GiantTour, move: CrossMove, graph: ExpandedGraph, m: int
) -> tuple[GiantTour, bool, HierarchicScore | None]:
    """Apply a CROSS move and re-propagate from scratch.

    Returns the new tour, its feasibility, and its hierarchic score (None
    when infeasible). This is the reference semantics the incremental scan
    inside descend must agree with.
    """
    i, l1, j, l2 = _normalize_move(move, tour.order.shape[0])
    new_tour = propagate(spliced_order(tour.order, i, l1, j, l2), graph)
    if not new_tour.feasible:
        return new_tour, False, None
    return new_tour, True, score(new_tour, graph, m)


@njit(cache=True)
def _move_feasible(order, arrival, i, l1, j, l2, is_depot, wo, wc, sv, dist):
    """Time-window check of the spliced tour, walking only what can change.

    Unchanged stretches are fast-forwarded as soon as the walk re-syncs with
    the stored arrivals: at any depot copy (full reset) or when the new
    arrival equals the old one. In the trailing suffix an arrival at or below
    the stored one is already proof of feasibility.
    """
    n = order.shape[0]
    prev = order[i - 1]
    v = arrival[i - 1]
    for pos in range(j, j + l2):  # second segment, spliced in first
        nd = order[pos]
        if is_depot[nd]:
            v = 0.0
            prev = nd
            continue
        arr = v + sv[prev] + dist[prev, nd]
        if arr < wo[nd]:
            arr = wo[nd]
        if arr > wc[nd]:
            return False
        v = arr
        prev = nd
    if j > i + l1:  # unchanged middle; re-syncs end at the old state
        synced = False
        for pos in range(i + l1, j):
            nd = order[pos]
            if is_depot[nd]:
                synced = True
                break
            arr = v + sv[prev] + dist[prev, nd]
            if arr < wo[nd]:
                arr = wo[nd]
            if arr > wc[nd]:
                return False
            if arr == arrival[pos]:
                synced = True
                break
            v = arr
            prev = nd
        if synced:
            prev = order[j - 1]
            v = arrival[j - 1]
    for pos in range(i, i + l1):  # first segment, spliced in second
        nd = order[pos]
        if is_depot[nd]:
            v = 0.0
            prev = nd
            continue
        arr = v + sv[prev] + dist[prev, nd]
        if arr < wo[nd]:
            arr = wo[nd]
        if arr > wc[nd]:
            return False
        v = arr
        prev = nd
    for pos in range(j + l2, n):  # unchanged suffix
        nd = order[pos]
        if is_depot[nd]:
            return True
        arr = v + sv[prev] + dist[prev, nd]
        if arr < wo[nd]:
            arr = wo[nd]
        if arr > wc[nd]:
            return False
        if arr <= arrival[pos]:
            return True
        v = arr
        prev = nd
    return True


_NEG = -1.0e18
_POS = 1.0e18


@njit(cache=True)
def _seg_tables(order, is_depot, wo, wc, sv, dist, max_len):
    """Per-pass segment algebra over the current order.

    Entering segment [p, p+l) at time t is feasible iff t <= lse[l, p]; the
    departure after serving it is max(t + dse[l, p], ese[l, p]). Depot
    copies reset the clock, which the sentinel arithmetic absorbs. dep[pos]
    is the departure time at each position of the current tour.
    """
    n = order.shape[0]
    lcap = max_len if max_len < n else n
    if lcap < 1:
        lcap = 1
    dse = np.empty((lcap + 1, n))
    ese = np.empty((lcap + 1, n))
    lse = np.empty((lcap + 1, n))
    for p in range(n):
        nd = order[p]
        if is_depot[nd]:
            dse[1, p] = _NEG
            ese[1, p] = 0.0
            lse[1, p] = _POS
        else:
            dse[1, p] = sv[nd]
            ese[1, p] = wo[nd] + sv[nd]
            lse[1, p] = wc[nd]
    for l in range(2, lcap + 1):
        for p in range(n - l + 1):
            q = p + l - 1
            d1 = dse[l - 1, p]
            e1 = ese[l - 1, p]
            l1v = lse[l - 1, p]
            c = dist[order[q - 1], order[q]]
            nd = order[q]
            if is_depot[nd]:
                d2, e2, l2v = _NEG, 0.0, _POS
            else:
                d2, e2, l2v = sv[nd], wo[nd] + sv[nd], wc[nd]
            if l1v <= _NEG or e1 + c > l2v:
                dse[l, p] = 0.0
                ese[l, p] = 0.0
                lse[l, p] = _NEG
            else:
                dse[l, p] = d1 + c + d2
                e = e1 + c + d2
                if e2 > e:
                    e = e2
                ese[l, p] = e
                lcomb = l2v - d1 - c
                lse[l, p] = l1v if l1v < lcomb else lcomb
    return dse, ese, lse


@njit(cache=True)
def _stretch_tables(order, arrival, dep, is_depot, wo, wc, sv, dist):
    """Per-pass slack structures for the unchanged stretches of the tour.

    A departure delayed by d at position p stays feasible through the
    following run of customers iff d never exceeds the remaining window
    slack plus the waiting absorbed on the way; an early departure is
    absorbed by the first waits. Range minima over both slack forms make
    those checks O(1) for any stretch, and next_copy marks where resets
    absorb everything.
    """
    n = order.shape[0]
    cw = np.zeros(n + 1)  # cumulative waiting, indexed like positions
    gdel = np.empty(n)
    osl = np.empty(n)
    next_copy = np.empty(n + 1, np.int64)
    next_copy[n] = n
    for pos in range(n - 1, -1, -1):
        next_copy[pos] = pos if is_depot[order[pos]] else next_copy[pos + 1]
    for pos in range(n):
        nd = order[pos]
        if is_depot[nd]:
            cw[pos + 1] = cw[pos]
            gdel[pos] = _POS
            osl[pos] = _POS
        else:
            prev = order[pos - 1]
            raw = dep[pos - 1] + dist[prev, nd]
            wait = arrival[pos] - raw
            if wait < 0.0:
                wait = 0.0
            cw[pos + 1] = cw[pos] + wait
            gdel[pos] = wc[nd] - arrival[pos] + cw[pos + 1]
            osl[pos] = arrival[pos] - wo[nd]
    # sparse tables for range minima
    levels = 1
    while (1 << levels) <= n:
        levels += 1
    lg = np.zeros(n + 1, np.int64)
    for span in range(2, n + 1):
        lg[span] = lg[span >> 1] + 1
    fg = np.empty((levels, n))
    fo = np.empty((levels, n))
    for pos in range(n):
        fg[0, pos] = gdel[pos]
        fo[0, pos] = osl[pos]
    for k in range(1, levels):
        half = 1 << (k - 1)
        for pos in range(n - (1 << k) + 1):
            a = fg[k - 1, pos]
            b = fg[k - 1, pos + half]
            fg[k, pos] = a if a < b else b
            a = fo[k - 1, pos]
            b = fo[k - 1, pos + half]
            fo[k, pos] = a if a < b else b
    return cw, next_copy, lg, fg, fo


@njit(inline="always")
def _range_min(f, lg, a, b):
    """Minimum over positions [a, b], inclusive; a <= b required."""
    k = lg[b - a + 1]
    x = f[k, a]
    y = f[k, b - (1 << k) + 1]
    return x if x < y else y


@njit(cache=True)
def _stretch_exit(p0, limit, d, dep, cw, next_copy, lg, fg, fo):
    """Departure state after the unchanged customer run (p0, limit).

    d is the exact departure at position p0. Returns (ok, t) where t is the
    departure at position limit-1; infeasible runs report ok=False. A depot
    copy inside the run absorbs any drift, so the old state is returned.
    """
    delta = d - dep[p0]
    nc = next_copy[p0 + 1]
    end = nc if nc < limit else limit  # run of customers is (p0, end)
    if delta > 0.0:
        if end > p0 + 1:
            bound = _range_min(fg, lg, p0 + 1, end - 1) - cw[p0 + 1]
            if delta > bound:
                return False, 0.0
        if nc < limit:
            return True, dep[limit - 1]
        out = delta - (cw[limit] - cw[p0 + 1])
        if out < 0.0:
            out = 0.0
        return True, dep[limit - 1] + out
    if delta < 0.0:
        if nc < limit:
            return True, dep[limit - 1]
        eps = -delta
        if end > p0 + 1:
            mo = _range_min(fo, lg, p0 + 1, end - 1)
            if mo < eps:
                eps = mo
        return True, dep[limit - 1] - eps
    return True, dep[limit - 1]


@njit(cache=True)
def _move_feasible_fast(order, dep, i, l1, j, l2, dse, ese, lse,
                        cw, next_copy, lg, fg, fo, is_depot, wo, wc, sv, dist):
    """O(1) time-window check of the spliced tour.

    The moved segments resolve through the segment algebra; the unchanged
    middle and suffix resolve through the slack structures after one exact
    step onto their first node.
    """
    n = order.shape[0]
    last = order[i - 1]
    t = dep[i - 1]
    if l2 > 0:
        t_in = t + dist[last, order[j]]
        if t_in > lse[l2, j]:
            return False
        t2 = t_in + dse[l2, j]
        e = ese[l2, j]
        t = t2 if t2 > e else e
        last = order[j + l2 - 1]
    p0 = i + l1
    if p0 < j:  # unchanged middle, ends right before position j
        nd = order[p0]
        if is_depot[nd]:
            t = dep[j - 1]
        else:
            arr = t + dist[last, nd]
            if arr > wc[nd]:
                return False
            if arr < wo[nd]:
                arr = wo[nd]
            ok, t = _stretch_exit(p0, j, arr + sv[nd], dep, cw, next_copy, lg, fg, fo)
            if not ok:
                return False
        last = order[j - 1]
    if l1 > 0:
        t_in = t + dist[last, order[i]]
        if t_in > lse[l1, i]:
            return False
        t2 = t_in + dse[l1, i]
        e = ese[l1, i]
        t = t2 if t2 > e else e
        last = order[i + l1 - 1]
    p0 = j + l2
    if p0 >= n:
        return True
    nd = order[p0]
    if is_depot[nd]:
        return True
    arr = t + dist[last, nd]
    if arr > wc[nd]:
        return False
    if arr < wo[nd]:
        arr = wo[nd]
    d = arr + sv[nd]
    if d <= dep[p0]:
        return True
    nc = next_copy[p0 + 1]
    end = nc if nc < n else n
    if end > p0 + 1:
        bound = _range_min(fg, lg, p0 + 1, end - 1) - cw[p0 + 1]
        if d - dep[p0] > bound:
            return False
    return True


@njit(cache=True)
def _tour_tables(order, is_depot, pz, n_paths):
    """Prefix tables of the current tour: cumulative prize, cumulative copy
    count, position of each depot copy, and per-path prizes."""
    n = order.shape[0]
    cp = np.zeros(n + 1)
    cc = np.zeros(n + 1, np.int64)
    copy_at = np.zeros(n_paths, np.int64)
    pp = np.zeros(n_paths)
    k = -1
    for pos in range(n):
        nd = order[pos]
        cp[pos + 1] = cp[pos] + pz[nd]
        if is_depot[nd]:
            k += 1
            copy_at[k] = pos
            cc[pos + 1] = cc[pos] + 1
        else:
            cc[pos + 1] = cc[pos]
            pp[k] += pz[nd]
    return cp, cc, copy_at, pp


@njit(cache=True)
def _emit_piece(p, q, acc, out, idx, cp, cc, copy_at, pp):
    """Fold range [p, q) of the current order into the new path-prize vector."""
    c = cc[q] - cc[p]
    if c == 0:
        return acc + cp[q] - cp[p], idx
    f1 = copy_at[cc[p]]
    out[idx] = acc + cp[f1] - cp[p]
    idx += 1
    for t in range(cc[p], cc[q] - 1):
        out[idx] = pp[t]
        idx += 1
    return cp[q] - cp[copy_at[cc[q] - 1]], idx


@njit(cache=True)
def _move_path_prizes(i, l1, j, l2, n, cp, cc, copy_at, pp, out):
    """Per-path prizes of the spliced tour, from prefix tables only."""
    k1 = cc[i] - 1
    for t in range(k1):
        out[t] = pp[t]
    acc = cp[i] - cp[copy_at[k1]]
    idx = k1
    acc, idx = _emit_piece(j, j + l2, acc, out, idx, cp, cc, copy_at, pp)
    acc, idx = _emit_piece(i + l1, j, acc, out, idx, cp, cc, copy_at, pp)
    acc, idx = _emit_piece(i, i + l1, acc, out, idx, cp, cc, copy_at, pp)
    acc, idx = _emit_piece(j + l2, n, acc, out, idx, cp, cc, copy_at, pp)
    out[idx] = acc


@njit(cache=True)
def _cmp_paths(pa, pb, m):
    """Hierarchic comparison of two per-path prize vectors: -1, 0 or 1."""
    n_paths = pa.shape[0]
    mm = m if m < n_paths else n_paths
    sa = 0.0
    sb = 0.0
    for k in range(mm):
        sa += pa[k]
        sb += pb[k]
    if sa > sb:
        return 1
    if sa < sb:
        return -1
    for k in range(mm, n_paths):
        if pa[k] > pb[k]:
            return 1
        if pa[k] < pb[k]:
            return -1
    return 0


@njit(inline="always")
def _emit_cmp(val, idx, pp, m, dmain):
    """One streaming comparison step; returns (verdict, done, dmain)."""
    if idx >= m:
        if dmain > 0.0:
            return 1, True, dmain
        if dmain < 0.0:
            return -1, True, dmain
        old = pp[idx]
        if val > old:
            return 1, True, dmain
        if val < old:
            return -1, True, dmain
        return 0, False, dmain
    return 0, False, dmain + (val - pp[idx])


@njit(cache=True)
def _build_cmp_tables(pp, max_shift):
    """Per-pass lookup tables: prefix sums of the path prizes and, for each
    index shift d, the first position where pp[t] differs from pp[t+d].

    They let the streaming comparison resolve a whole displaced run of
    unchanged paths in one step.
    """
    n_paths = pp.shape[0]
    pps = np.zeros(n_paths + 1)
    for k in range(n_paths):
        pps[k + 1] = pps[k] + pp[k]
    s = max_shift
    if s > n_paths - 1:
        s = n_paths - 1
    if s < 1:
        s = 1
    nd = np.empty((s + 1, n_paths + 1), np.int64)
    for d in range(1, s + 1):
        limit = n_paths - d
        for t in range(limit, n_paths + 1):
            nd[d, t] = limit
        for t in range(limit - 1, -1, -1):
            nd[d, t] = t if pp[t] != pp[t + d] else nd[d, t + 1]
    return pps, nd


@njit(cache=True)
def _move_cmp(i, l1, j, l2, n, cp, cc, copy_at, pp, pps, nd, m):
    """Hierarchic comparison of the spliced tour against the current one,
    streamed entry by entry without materializing the candidate vector.

    Runs of unmoved complete paths are folded in O(1) via the prefix sums
    and first-difference tables. Exactly equivalent to building the
    candidate path prizes and running _cmp_paths.
    """
    k1 = cc[i] - 1
    idx = k1
    acc = cp[i] - cp[copy_at[k1]]
    dmain = 0.0
    for piece in range(4):
        if piece == 0:
            p, q = j, j + l2
        elif piece == 1:
            p, q = i + l1, j
        elif piece == 2:
            p, q = i, i + l1
        else:
            p, q = j + l2, n
        c = cc[q] - cc[p]
        if c == 0:
            acc += cp[q] - cp[p]
            continue
        val = acc + cp[copy_at[cc[p]]] - cp[p]
        verdict, done, dmain = _emit_cmp(val, idx, pp, m, dmain)
        if done:
            return verdict
        idx += 1
        t0 = cc[p]
        t1 = cc[q] - 1
        d = idx - t0
        ad = d if d >= 0 else -d
        if d != 0 and t1 > t0:
            if ad < nd.shape[0]:
                tm = m - d  # entries below this t land in the main sum
                if tm < t0:
                    tm = t0
                if tm > t1:
                    tm = t1
                if tm > t0:
                    dmain += (pps[tm] - pps[t0]) - (pps[tm + d] - pps[t0 + d])
                if tm < t1:
                    if dmain > 0.0:
                        return 1
                    if dmain < 0.0:
                        return -1
                    if d > 0:
                        tq = nd[d, tm]
                    else:
                        tq = nd[-d, tm + d] - d
                    if tq < t1:
                        return 1 if pp[tq] > pp[tq + d] else -1
            else:
                # displaced run beyond the table range: walk it (short in practice)
                for t in range(t0, t1):
                    verdict, done, dmain = _emit_cmp(pp[t], idx + (t - t0), pp, m, dmain)
                    if done:
                        return verdict
        idx += t1 - t0
        acc = cp[q] - cp[copy_at[cc[q] - 1]]
    verdict, done, dmain = _emit_cmp(acc, idx, pp, m, dmain)
    if done:
        return verdict
    if dmain > 0.0:
        return 1
    if dmain < 0.0:
        return -1
    return 0


# _evaluate_move statuses
INFEASIBLE = 0
EVALUATED = 1
SKIPPED = 2


@njit(cache=True)
def _evaluate_move(order, dep, i, l1, j, l2, cp, cc, copy_at, pp, pps, nd,
                   dse, ese, lse, stretch, m, is_depot, wo, wc, sv, dist,
                   need_nonimproving):
    """Feasibility and hierarchic comparison of one move against the tour.

    Returns (status, cmp). Exact shortcuts keep the common cases cheap:
    swapping equal-length runs of depot copies leaves the tour semantically
    unchanged, and copy-free segments shift prize between exactly two paths.
    When need_nonimproving is false, provably non-improving candidates may
    be SKIPPED before the feasibility check.
    """
    n = order.shape[0]
    c1 = cc[i + l1] - cc[i]
    c2 = cc[j + l2] - cc[j]
    if c1 == l1 and c2 == l2 and c1 == c2:
        # pure copy-run swap: identical customer paths, identical arrivals
        if not need_nonimproving:
            return SKIPPED, 0
        return EVALUATED, 0
    if c1 == 0 and c2 == 0:
        # copy-free segments move prize between exactly two paths
        delta = (cp[j + l2] - cp[j]) - (cp[i + l1] - cp[i])
        k1 = cc[i] - 1
        k2 = cc[j] - 1
        if k1 == k2 or delta == 0.0 or k2 < m:
            cmp = 0
        elif delta > 0.0:
            cmp = 1
        else:
            cmp = -1
        if cmp <= 0 and not need_nonimproving:
            return SKIPPED, 0
        cw, next_copy, lg, fg, fo = stretch
        if not _move_feasible_fast(order, dep, i, l1, j, l2, dse, ese, lse,
                                   cw, next_copy, lg, fg, fo,
                                   is_depot, wo, wc, sv, dist):
            return INFEASIBLE, 0
        return EVALUATED, cmp
    # mixed segments: the streamed score comparison is cheaper than the
    # feasibility check here, so it gates the walk
    k1 = cc[i] - 1
    cmp = 2  # unresolved
    if k1 >= m:
        # all changed entries are tail entries, so the first one usually
        # settles the lexicographic comparison on its own
        acc = cp[i] - cp[copy_at[k1]]
        if c2 > 0:
            first = acc + cp[copy_at[cc[j]]] - cp[j]
        else:
            acc += cp[j + l2] - cp[j]
            if cc[j] - cc[i + l1] > 0:
                first = acc + cp[copy_at[cc[i + l1]]] - cp[i + l1]
            else:
                acc += cp[j] - cp[i + l1]
                if c1 > 0:
                    first = acc + cp[copy_at[cc[i]]] - cp[i]
                else:
                    acc += cp[i + l1] - cp[i]
                    if cc[n] - cc[j + l2] > 0:
                        first = acc + cp[copy_at[cc[j + l2]]] - cp[j + l2]
                    else:
                        first = acc + cp[n] - cp[j + l2]
        old = pp[k1]
        if first > old:
            cmp = 1
        elif first < old:
            cmp = -1
    if cmp == 2:
        cmp = _move_cmp(i, l1, j, l2, n, cp, cc, copy_at, pp, pps, nd, m)
    if cmp <= 0 and not need_nonimproving:
        return SKIPPED, 0
    cw, next_copy, lg, fg, fo = stretch
    if not _move_feasible_fast(order, dep, i, l1, j, l2, dse, ese, lse,
                               cw, next_copy, lg, fg, fo,
                               is_depot, wo, wc, sv, dist):
        return INFEASIBLE, 0
    return EVALUATED, cmp


@njit(cache=True)
def _scan(order, arrival, dep, cp, cc, copy_at, pp, anchors, max_len, m,
          is_depot, wo, wc, sv, dist):
    """One pass over the neighborhood in anchor order.

    Stops at the first strictly improving feasible move. The best feasible
    non-improving move is tracked with first-encountered tie breaking; a
    score-preserving move is the best possible, so finding one freezes the
    tracker. Returns (improving_found, move, ni_found, ni_move).
    """
    n = order.shape[0]
    cand_pp = np.empty(pp.shape[0])
    ni_pp = np.empty(pp.shape[0])
    pps, ndt = _build_cmp_tables(pp, 2 * max_len)
    dse, ese, lse = _seg_tables(order, is_depot, wo, wc, sv, dist, max_len)
    stretch = _stretch_tables(order, arrival, dep, is_depot, wo, wc, sv, dist)
    ni_found = False
    ni_is_equal = False
    ni_pp_built = False
    ni_move = (0, 0, 0, 0)
    for ai in range(anchors.shape[0]):
        i = anchors[ai]
        for l1 in range(max_len + 1):
            if i + l1 > n:
                break
            for l2 in range(max_len + 1):
                if l1 == 0 and l2 == 0:
                    continue
                # each unordered move is examined once, led by its earlier
                # position; the anchor order still randomizes the scan
                for j in range(i + l1, n - l2 + 1):
                    if l1 == 0 and j == i:
                        continue
                    if l2 == 0 and j == i + l1:
                        continue
                    status, cmp = _evaluate_move(
                        order, dep, i, l1, j, l2, cp, cc, copy_at, pp, pps, ndt,
                        dse, ese, lse, stretch, m, is_depot, wo, wc, sv, dist,
                        not ni_is_equal,
                    )
                    if status != EVALUATED:
                        continue
                    if cmp > 0:
                        return True, (i, l1, j, l2), ni_found, ni_move
                    if ni_is_equal:
                        continue
                    if cmp == 0:
                        ni_found = True
                        ni_is_equal = True
                        ni_move = (i, l1, j, l2)
                        continue
                    _move_path_prizes(i, l1, j, l2, n, cp, cc, copy_at, pp, cand_pp)
                    if not ni_found or (ni_pp_built and _cmp_paths(cand_pp, ni_pp, m) > 0):
                        ni_found = True
                        ni_pp_built = True
                        ni_pp[:] = cand_pp
                        ni_move = (i, l1, j, l2)
    return False, (0, 0, 0, 0), ni_found, ni_move


@njit(cache=True)
def _departures(order, arrival, is_depot, sv):
    n = order.shape[0]
    dep = np.empty(n)
    for pos in range(n):
        nd = order[pos]
        dep[pos] = 0.0 if is_depot[nd] else arrival[pos] + sv[nd]
    return dep


@njit(cache=True)
def _splice(order, i, l1, j, l2):
    n = order.shape[0]
    out = np.empty(n, np.int64)
    idx = 0
    for pos in range(i):
        out[idx] = order[pos]
        idx += 1
    for pos in range(j, j + l2):
        out[idx] = order[pos]
        idx += 1
    for pos in range(i + l1, j):
        out[idx] = order[pos]
        idx += 1
    for pos in range(i, i + l1):
        out[idx] = order[pos]
        idx += 1
    for pos in range(j + l2, n):
        out[idx] = order[pos]
        idx += 1
    return out


@njit(cache=True)
def descend_kernel(order, m, max_len, ni_cap, is_depot, wo, wc, sv, pz, dist, n_paths):
    """First-improvement descent with capped best-non-improving acceptance.

    Anchors are reshuffled before every pass. Returns the best visit order
    seen during the descent.
    """
    n = order.shape[0]
    cur = order.copy()
    arrival, _path_index, _feasible, _pp = propagate_kernel(
        cur, is_depot, wo, wc, sv, dist, pz, n_paths
    )
    dep = _departures(cur, arrival, is_depot, sv)
    cp, cc, copy_at, pp = _tour_tables(cur, is_depot, pz, n_paths)
    best = cur.copy()
    best_pp = pp.copy()
    anchors = np.arange(1, n)
    ni = 0
    while True:
        np.random.shuffle(anchors)
        found, move, ni_found, ni_move = _scan(
            cur, arrival, dep, cp, cc, copy_at, pp, anchors, max_len, m,
            is_depot, wo, wc, sv, dist,
        )
        if found:
            i, l1, j, l2 = move
            ni = 0
        elif ni_found:
            i, l1, j, l2 = ni_move
            ni += 1
        else:
            break
        cur = _splice(cur, i, l1, j, l2)
        arrival, _path_index, _feasible, _pp = propagate_kernel(
            cur, is_depot, wo, wc, sv, dist, pz, n_paths
        )
        dep = _departures(cur, arrival, is_depot, sv)
        cp, cc, copy_at, pp = _tour_tables(cur, is_depot, pz, n_paths)
        if _cmp_paths(pp, best_pp, m) > 0:
            best = cur.copy()
            best_pp[:] = pp
        if ni >= ni_cap:
            break
    return best


def descend(
    tour: GiantTour,
    graph: ExpandedGraph,
    params: LocalSearchParams,
    state: ChainLengthState,
    m: int,
    rng: int | None = None,
) -> GiantTour:
    """Locally optimize a feasible tour; never returns something worse."""
    if not tour.feasible:
        raise ValueError("descend requires a feasible tour")
    if graph.expanded_size <= 1:
        return tour.copy()
    if rng is not None:
        from ._jit import seed_kernels

        seed_kernels(rng)
    best = descend_kernel(
        np.ascontiguousarray(tour.order, dtype=np.int64),
        m,
        state.current_max_len,
        params.ni_cap,
        graph.is_depot,
        graph.window_open,
        graph.window_close,
        graph.service,
        graph.prize,
        graph.dist,
        graph.depot_copies,
    )
    return propagate(best, graph)
