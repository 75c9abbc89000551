"""Randomized construction of an initial feasible solution.

Step 1 assigns customers to facilities, most constrained customers first.
Step 2 distributes the open facilities over depots and vehicle routes and
splits routes until the fleet size is reached.
"""

from __future__ import annotations

import numpy as np

from .core import EPS, Instance, Route, Solution, validate

RETRIES = 50


class ConstructionError(RuntimeError):
    pass


def assign_customers(inst: Instance, rng: np.random.Generator) -> tuple[list[int], set[int]]:
    """Return a capacity-feasible assignment and the facilities it opens (at least M of them)."""
    for _ in range(RETRIES):
        out = _assign_once(inst, rng)
        if out is not None:
            return out
    raise ConstructionError("no capacity-feasible customer assignment found")


def _by_options(inst: Instance, customers, rng: np.random.Generator) -> list[int]:
    customers = list(customers)
    rng.shuffle(customers)
    return sorted(customers, key=lambda l: len(inst.coverage[l]))


def _assign_once(inst: Instance, rng: np.random.Generator):
    n = inst.n_customers
    assign = [-1] * n
    load = {f: 0.0 for f in inst.facilities}
    coverers = inst.coverers()
    q = [float(v) for v in inst.demand]
    # a facility can never carry more than one vehicle or the largest depot holds
    ceiling = min(inst.vehicle_capacity, float(inst.depot_capacity.max()))
    cap = {f: min(inst.fac_cap(f), ceiling) for f in inst.facilities}
    order = _by_options(inst, range(n), rng)
    opened: set[int] = set()
    for l in order:
        if assign[l] != -1:
            continue
        options = [f for f in sorted(inst.coverage[l]) if load[f] + q[l] <= cap[f] + EPS]
        if not options:
            return None
        f = options[int(rng.integers(len(options)))]
        opened.add(f)
        for m in _by_options(inst, coverers[f], rng):
            if assign[m] == -1 and load[f] + q[m] <= cap[f] + EPS:
                assign[m] = f
                load[f] += q[m]
        if assign[l] == -1:
            return None

    # shift customers to newly opened facilities until every vehicle can get one
    while len(opened) < inst.n_vehicles:
        moves = []
        for m in range(n):
            f = assign[m]
            if sum(1 for x in assign if x == f) < 2:
                continue
            for g in inst.coverage[m]:
                if g not in opened and q[m] <= cap[g] + EPS:
                    moves.append((m, g))
        if not moves:
            return None
        m, g = moves[int(rng.integers(len(moves)))]
        load[assign[m]] -= q[m]
        assign[m] = g
        load[g] += q[m]
        opened.add(g)
    return assign, opened


def _split(inst: Instance, route: Route, loads: dict[int, float]) -> tuple[Route, Route]:
    total = sum(loads[f] for f in route.stops)
    best_t, best_gap = 1, None
    head = 0.0
    for t in range(1, len(route.stops)):
        head += loads[route.stops[t - 1]]
        gap = abs(total - 2 * head)
        if best_gap is None or gap < best_gap - 1e-12:
            best_t, best_gap = t, gap
    return Route(route.depot, route.stops[:best_t]), Route(route.depot, route.stops[best_t:])


def assign_routes(inst: Instance, assignment: list[int], open_facilities: set[int],
                  rng: np.random.Generator) -> Solution:
    """Distribute ``open_facilities`` over exactly M depot-anchored routes."""
    if len(open_facilities) < inst.n_vehicles:
        raise ConstructionError("fewer open facilities than vehicles")
    for _ in range(RETRIES):
        sol = _routes_once(inst, assignment, open_facilities, rng)
        if sol is not None:
            return sol
    raise ConstructionError("no capacity-feasible route assignment found")


def _routes_once(inst: Instance, assignment: list[int], open_facilities: set[int],
                 rng: np.random.Generator) -> Solution | None:
    Q = inst.vehicle_capacity
    M = inst.n_vehicles
    loads = {f: 0.0 for f in inst.facilities}
    for l, f in enumerate(assignment):
        loads[f] += float(inst.demand[l])
    routes: list[Route] = []
    rload: list[float] = []
    dload = {d: 0.0 for d in inst.depots}
    opened: list[int] = []
    c = inst.c

    facilities = sorted(open_facilities)
    rng.shuffle(facilities)
    for f in facilities:
        w = loads[f]
        fits = [k for k, r in enumerate(routes)
                if rload[k] + w <= Q + EPS and dload[r.depot] + w <= inst.depot_capacity[r.depot] + EPS]
        if not fits:
            if len(routes) >= M:
                return None
            fresh = [d for d in opened if dload[d] + w <= inst.depot_capacity[d] + EPS]
            if fresh:
                d = fresh[int(rng.integers(len(fresh)))]
                routes.append(Route(d, []))
                rload.append(0.0)
            else:
                closed = [d for d in inst.depots
                          if d not in opened and w <= inst.depot_capacity[d] + EPS]
                if not closed:
                    return None
                d = min(closed, key=lambda d: (c[d][f], d))
                opened.append(d)
                most = max(1, int(inst.depot_capacity[d] // Q))
                count = int(rng.integers(1, most + 1))
                count = min(count, M - len(routes))
                for _ in range(count):
                    routes.append(Route(d, []))
                    rload.append(0.0)
            fits = [k for k, r in enumerate(routes)
                    if not r.stops and rload[k] + w <= Q + EPS
                    and dload[r.depot] + w <= inst.depot_capacity[r.depot] + EPS]
            if not fits:
                return None
        k = fits[int(rng.integers(len(fits)))]
        routes[k].stops.append(f)
        rload[k] += w
        dload[routes[k].depot] += w

    routes = [r for r in routes if r.stops]
    while len(routes) < M:
        splittable = [r for r in routes if len(r.stops) >= 2]
        if not splittable:
            return None
        longest = max(splittable, key=lambda r: len(r.stops))
        routes.remove(longest)
        routes.extend(_split(inst, longest, loads))
    sol = Solution(routes, list(assignment))
    if validate(inst, sol):
        return None
    return sol


def construct(inst: Instance, rng: np.random.Generator) -> Solution:
    """Both construction steps with randomized restarts."""
    for _ in range(RETRIES):
        assignment, opened = assign_customers(inst, rng)
        try:
            return assign_routes(inst, assignment, opened, rng)
        except ConstructionError:
            continue
    raise ConstructionError("construction failed after all restarts")
