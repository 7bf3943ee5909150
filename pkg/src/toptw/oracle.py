"""Exact solver for desk-scale instances, used as ground truth in tests.

Exhausts every assignment of customers to at most m ordered routes via a
subset dynamic program, so it is exponential and deliberately capped at nine
customers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .instances import Instance
from .model import RouteSet

INF = math.inf


@dataclass(frozen=True)
class ExactResult:
    optimal_prize: float
    optimal_routes: RouteSet
    explored: int


def brute_force(instance: Instance, m: int, customer_cap: int = 9) -> ExactResult:
    """Maximum-prize set of at most m disjoint time-window-feasible routes.

    Only customers reachable from the depot participate; their count must
    not exceed customer_cap.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 <= customer_cap <= 9:
        raise ValueError("customer_cap must be between 0 and 9")
    cust = [c.id for c, ok in zip(instance.customers, instance.reachable) if ok]
    n = len(cust)
    if n > customer_cap:
        raise ValueError(f"{n} feasible customers exceed the cap of {customer_cap}")
    if n == 0:
        return ExactResult(0.0, RouteSet(((),) * m, 0.0), 0)

    t = instance.travel_time
    a = [instance.nodes[c].window_open for c in cust]
    b = [instance.nodes[c].window_close for c in cust]
    s = [instance.nodes[c].service_time for c in cust]
    p = [instance.nodes[c].prize for c in cust]
    full = 1 << n
    explored = 0

    # done[mask][last]: earliest end-of-service over routes visiting exactly
    # mask and ending at last; parent pointers rebuild the ordering.
    done = [[INF] * n for _ in range(full)]
    parent = [[-1] * n for _ in range(full)]
    for j in range(n):
        arr = max(t(0, cust[j]), a[j])
        if arr <= b[j]:
            done[1 << j][j] = arr + s[j]
    for mask in range(1, full):
        for last in range(n):
            base = done[mask][last]
            if base == INF:
                continue
            for k in range(n):
                bit = 1 << k
                if mask & bit:
                    continue
                explored += 1
                arr = max(base + t(cust[last], cust[k]), a[k])
                if arr <= b[k] and arr + s[k] < done[mask | bit][k]:
                    done[mask | bit][k] = arr + s[k]
                    parent[mask | bit][k] = last
    route_ok = [mask == 0 or min(done[mask]) < INF for mask in range(full)]

    # cover[k][mask]: mask splits into at most k feasible routes
    m_eff = min(m, n)
    cover = [[False] * full for _ in range(m_eff + 1)]
    cover[0][0] = True
    split = [[-1] * full for _ in range(m_eff + 1)]
    for k in range(1, m_eff + 1):
        for mask in range(full):
            if cover[k - 1][mask]:
                cover[k][mask] = True
                split[k][mask] = 0
                continue
            sub = mask
            while sub:
                explored += 1
                if route_ok[sub] and cover[k - 1][mask ^ sub]:
                    cover[k][mask] = True
                    split[k][mask] = sub
                    break
                sub = (sub - 1) & mask
    prize_of = [sum(p[j] for j in range(n) if mask >> j & 1) for mask in range(full)]
    best_mask = max(
        (mask for mask in range(full) if cover[m_eff][mask]),
        key=lambda mask: prize_of[mask],
    )

    def rebuild_route(mask: int) -> tuple[int, ...]:
        last = min(
            (j for j in range(n) if done[mask][j] < INF), key=lambda j: done[mask][j]
        )
        seq = []
        while last >= 0:
            seq.append(cust[last])
            nxt = parent[mask][last]
            mask ^= 1 << last
            last = nxt
        return tuple(reversed(seq))

    routes: list[tuple[int, ...]] = []
    mask, k = best_mask, m_eff
    while k > 0:
        sub = split[k][mask]
        routes.append(rebuild_route(sub) if sub else ())
        mask ^= sub
        k -= 1
    routes = [r for r in routes if r]
    while len(routes) < m:
        routes.append(())
    return ExactResult(
        optimal_prize=float(prize_of[best_mask]),
        optimal_routes=RouteSet(tuple(routes), float(prize_of[best_mask])),
        explored=explored,
    )
