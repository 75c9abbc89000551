"""Customer-to-facility restructuring operators.

OpenFacilityShift, ClosedFacilityShift, GreedyStringReplacement and the
CustomerIP matheuristic.  Every operator takes a feasible solution and
returns a feasible solution that is never more expensive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Literal

from . import milp
from .core import EPS, Instance, Route, Solution, evaluate, path_cost, route_cost, validate

log = logging.getLogger(__name__)

FacilityNeighbors = dict[int, frozenset[int]]


def facility_neighbors(inst: Instance) -> FacilityNeighbors:
    """FN(f): facilities sharing at least one coverable customer with ``f``."""
    out: dict[int, set[int]] = {f: set() for f in inst.facilities}
    for cov in inst.coverage:
        for f in cov:
            out[f].update(cov)
    return {f: frozenset(s - {f}) for f, s in out.items()}


def fixed_facilities(inst: Instance) -> frozenset[int]:
    """Facilities that are the only option of some customer."""
    return frozenset(next(iter(cov)) for cov in inst.coverage if len(cov) == 1)


class _State:
    """Mutable view of a solution with load bookkeeping."""

    def __init__(self, inst: Instance, sol: Solution) -> None:
        self.inst = inst
        self.sol = sol
        self.fac = {f: 0.0 for f in inst.facilities}
        self.custs: dict[int, set[int]] = {f: set() for f in inst.facilities}
        for l, f in enumerate(sol.assignment):
            self.fac[f] += float(inst.demand[l])
            self.custs[f].add(l)
        self.route_of = sol.route_of()
        self.route_load = [sum(self.fac[f] for f in r.stops) for r in sol.routes]
        self.depot_load = {d: 0.0 for d in inst.depots}
        for r, w in zip(sol.routes, self.route_load):
            self.depot_load[r.depot] += w

    def depot_of(self, f: int) -> int:
        return self.sol.routes[self.route_of[f]].depot

    def fac_room(self, f: int) -> float:
        return self.inst.fac_cap(f) - self.fac[f]

    def route_room(self, k: int) -> float:
        return self.inst.vehicle_capacity - self.route_load[k]

    def depot_room(self, d: int) -> float:
        return self.inst.depot_capacity[d] - self.depot_load[d]

    def assign(self, l: int, f: int, k: int) -> None:
        """Assign customer ``l`` (currently unassigned) to ``f`` on route ``k``."""
        q = float(self.inst.demand[l])
        self.sol.assignment[l] = f
        self.custs[f].add(l)
        self.fac[f] += q
        self.route_load[k] += q
        self.depot_load[self.sol.routes[k].depot] += q

    def unassign(self, l: int, k: int) -> None:
        f = self.sol.assignment[l]
        q = float(self.inst.demand[l])
        self.custs[f].discard(l)
        self.fac[f] -= q
        self.route_load[k] -= q
        self.depot_load[self.sol.routes[k].depot] -= q
        self.sol.assignment[l] = -1

    def move_all(self, f: int, g: int) -> None:
        """Transfer every customer of ``f`` to ``g`` (``g`` already routed)."""
        kf, kg = self.route_of[f], self.route_of[g]
        for l in sorted(self.custs[f]):
            self.unassign(l, kf)
            self.assign(l, g, kg)


def _neighbors_in_route(route: Route, f: int) -> tuple[int, int, int]:
    p = route.path()
    i = p.index(f, 1)
    return i - 1, p[i - 1], p[i + 1]


def open_facility_shift(inst: Instance, sol: Solution, FN: FacilityNeighbors) -> Solution:
    """Close open facilities whose customers fit into another open facility, when the detour saving is positive."""
    sol = sol.copy()
    st = _State(inst, sol)
    c = inst.c
    unchecked = set(st.route_of)
    while unchecked:
        f = min(unchecked)
        unchecked.remove(f)
        if f not in st.route_of:
            continue
        k = st.route_of[f]
        route = sol.routes[k]
        if len(route.stops) == 1:
            continue
        _, prev, nxt = _neighbors_in_route(route, f)
        saving = c[prev][nxt] - c[prev][f] - c[f][nxt]
        if saving >= -EPS:
            continue
        custs = st.custs[f]
        w = st.fac[f]
        for g in sorted(FN[f]):
            if g not in st.route_of:
                continue
            if not all(g in inst.coverage[l] for l in custs):
                continue
            kg = st.route_of[g]
            if st.fac_room(g) < w - EPS:
                continue
            if kg != k and st.route_room(kg) < w - EPS:
                continue
            dg = sol.routes[kg].depot
            if dg != route.depot and st.depot_room(dg) < w - EPS:
                continue
            st.move_all(f, g)
            route.stops.remove(f)
            del st.route_of[f]
            unchecked.add(g)
            break
    return sol


def closed_facility_shift(inst: Instance, sol: Solution, FN: FacilityNeighbors) -> Solution:
    """Replace an open facility by a closed one that can take all its customers at lower routing cost."""
    sol = sol.copy()
    st = _State(inst, sol)
    c = inst.c
    unchecked = set(st.route_of)
    while unchecked:
        f = min(unchecked)
        unchecked.remove(f)
        if f not in st.route_of:
            continue
        k = st.route_of[f]
        route = sol.routes[k]
        if len(route.stops) == 1:
            continue
        idx, prev, nxt = _neighbors_in_route(route, f)
        old = c[prev][f] + c[f][nxt]
        custs = st.custs[f]
        w = st.fac[f]
        for g in sorted(FN[f]):
            if g in st.route_of:
                continue
            if not all(g in inst.coverage[l] for l in custs):
                continue
            if inst.fac_cap(g) < w - EPS:
                continue
            if c[prev][g] + c[g][nxt] - old >= -EPS:
                continue
            route.stops[idx] = g
            st.route_of[g] = k
            st.move_all(f, g)
            del st.route_of[f]
            unchecked.add(g)
            break
    return sol


def greedy_string_replacement(inst: Instance, sol: Solution, sl: int,
                              order: Literal["descending", "ascending"] = "descending") -> Solution:
    """One sweep of string cut-and-rebuild over all open facilities."""
    if sl < 1:
        raise ValueError("string length must be positive")
    sol = sol.copy()
    unchecked = set(sol.open_facilities())
    while unchecked:
        fi = min(unchecked)
        unchecked.remove(fi)
        route_of = sol.route_of()
        if fi not in route_of:
            continue
        trial = _rebuild_string(inst, sol, route_of[fi], fi, sl, order)
        if trial is None:
            continue
        new_sol, new_string, old_cost, new_cost = trial
        if new_cost < old_cost - EPS:
            sol = new_sol
            unchecked |= set(new_string)
    return sol


def _rebuild_string(inst: Instance, sol: Solution, k: int, fi: int, sl: int, order: str):
    c = inst.c
    trial = sol.copy()
    st = _State(inst, trial)
    route = trial.routes[k]
    i = route.stops.index(fi)
    s = route.stops[i:i + sl]
    p = route.path()
    prev, nxt = p[i], p[i + len(s) + 1]
    old_cost = path_cost(c, [prev, *s, nxt])

    C = sorted(l for f in s for l in st.custs[f])
    for l in C:
        st.unassign(l, k)
    string_set = set(s)
    for f in s:
        del st.route_of[f]
    fixed = [f for f in s if any(inst.coverage[l] == frozenset((f,)) for l in C)]
    new_string = list(fixed)
    for f in fixed:
        st.route_of[f] = k
    for l in C:
        cov = inst.coverage[l]
        if len(cov) == 1:
            st.assign(l, next(iter(cov)), k)

    needed = set().union(*(inst.coverage[l] for l in C)) if C else set()
    others = {f for f in st.route_of if st.route_of[f] != k and f in needed}
    same = {f for f in route.stops if f not in string_set and f in needed} | set(fixed)
    closed = {f for f in needed if f not in st.route_of}

    rest = [l for l in C if len(inst.coverage[l]) > 1]
    sign = -1 if order == "descending" else 1
    rest.sort(key=lambda l: (sign * float(inst.demand[l]), l))
    for l in rest:
        q = float(inst.demand[l])
        cov = inst.coverage[l]
        target = None
        for g in sorted(others & cov):
            kg = st.route_of[g]
            if (st.fac_room(g) >= q - EPS and st.route_room(kg) >= q - EPS
                    and st.depot_room(trial.routes[kg].depot) >= q - EPS):
                target = (g, kg)
                break
        if target is None:
            for g in sorted(same & cov):
                if st.fac_room(g) >= q - EPS:
                    target = (g, k)
                    break
        if target is None:
            seq = [prev, *new_string, nxt]
            best = None
            for g in sorted(closed & cov):
                if inst.fac_cap(g) < q - EPS:
                    continue
                for t in range(len(seq) - 1):
                    u, v = seq[t], seq[t + 1]
                    cost = c[u][g] + c[g][v] - c[u][v]
                    if best is None or cost < best[0] - 1e-12:
                        best = (cost, g, t)
            if best is None:
                return None
            _, g, t = best
            new_string.insert(t, g)
            st.route_of[g] = k
            same.add(g)
            closed.discard(g)
            target = (g, k)
        st.assign(l, *target)

    stops = route.stops[:i] + new_string + route.stops[i + len(s):]
    if not stops:
        return None
    route.stops = stops
    new_cost = path_cost(c, [prev, *new_string, nxt])
    return trial, new_string, old_cost, new_cost


def greedy_string_replacement_fixpoint(inst: Instance, sol: Solution, sl: int) -> Solution:
    """Alternate descending and ascending demand order until neither sweep improves."""
    current = evaluate(inst, sol).total
    while True:
        improved = False
        for order in ("descending", "ascending"):
            cand = greedy_string_replacement(inst, sol, sl, order)
            val = evaluate(inst, cand).total
            if val < current - EPS:
                sol, current, improved = cand, val, True
        if not improved:
            return sol


# --------------------------------------------------------------------------
# Customer IP


@dataclass
class CustomerIpModel:
    f: int
    f1: int
    customers: list[int]  # C
    partial: list[Route]  # one per route index k in K
    alternatives: list[list[tuple[int, ...]]]  # A_k, original route first
    ext_cost: list[list[float]]  # c^k_r
    closed: frozenset[int]  # F^cl
    resident: list[frozenset[int]]  # F^res_k
    cap_fac: dict[int, float]
    cap_route: list[float]
    cap_depot: dict[int, float]
    removal_saving: float  # Δ_{f,f1}
    problem: milp.MilpProblem
    x_vars: dict[tuple[int, int, int], str] = field(default_factory=dict)  # (c, k, f) -> name
    y_vars: dict[tuple[int, int], str] = field(default_factory=dict)  # (k, r) -> name


class NoPartnerError(LookupError):
    """No eligible second facility for a Customer IP episode."""


def nearest_partner(inst: Instance, sol: Solution, f: int, excluded: set[int] | frozenset[int]) -> int:
    """Closest open facility (by travel cost) other than ``f`` and outside ``excluded``."""
    c = inst.c
    cands = [g for g in sol.open_facilities() if g != f and g not in excluded]
    if not cands:
        raise NoPartnerError(f"no partner facility for {f}")
    return min(cands, key=lambda g: (c[f][g], g))


def _best_insertion(c, depot: int, stops: list[int], g: int) -> tuple[float, int]:
    p = [depot, *stops, depot]
    best = None
    for t in range(len(p) - 1):
        val = c[p[t]][g] + c[g][p[t + 1]] - c[p[t]][p[t + 1]]
        if best is None or val < best[0] - 1e-12:
            best = (val, t)
    assert best is not None
    return best


def _alternatives(inst: Instance, partial: Route, original: tuple[int, ...],
                  closed: list[int]) -> list[tuple[int, ...]]:
    c = inst.c
    orig_cost = route_cost(inst, Route(partial.depot, list(original)))
    alts = [original]
    seen = {original}

    def add(stops: list[int]) -> None:
        t = tuple(stops)
        if t in seen:
            return
        if path_cost(c, [partial.depot, *stops, partial.depot]) < orig_cost - EPS:
            alts.append(t)
            seen.add(t)

    pos: dict[int, int] = {}
    for g in closed:
        _, t = _best_insertion(c, partial.depot, partial.stops, g)
        pos[g] = t
        stops = list(partial.stops)
        stops.insert(t, g)
        add(stops)
    for g1, g2 in combinations(closed, 2):
        t1, t2 = pos[g1], pos[g2]
        if t1 != t2:
            stops = list(partial.stops)
            for g, t in sorted(((g1, t1), (g2, t2)), key=lambda gt: -gt[1]):
                stops.insert(t, g)
            add(stops)
        else:
            a = partial.stops[:t1] + [g1, g2] + partial.stops[t1:]
            b = partial.stops[:t1] + [g2, g1] + partial.stops[t1:]
            ca = path_cost(c, [partial.depot, *a, partial.depot])
            cb = path_cost(c, [partial.depot, *b, partial.depot])
            add(a if ca <= cb else b)
    return alts


def build_customer_ip(inst: Instance, sol: Solution, f: int, f1: int) -> CustomerIpModel:
    """Remove ``f`` and ``f1``, enumerate alternative routes, and state the reassignment IP."""
    custs_of = sol.customers_of()
    routes = sol.routes
    partial = [Route(r.depot, [g for g in r.stops if g not in (f, f1)]) for r in routes]
    saving = sum(route_cost(inst, r) for r in routes) - sum(route_cost(inst, r) for r in partial)
    C = sorted(custs_of.get(f, []) + custs_of.get(f1, []))
    open_now = sol.open_facilities()
    needed = set().union(*(inst.coverage[l] for l in C)) if C else set()
    closed = frozenset(g for g in inst.facilities if g not in open_now or g in (f, f1))
    useful = sorted(g for g in closed if g in needed)

    fac = {g: 0.0 for g in inst.facilities}
    for l, g in enumerate(sol.assignment):
        if l not in C:
            fac[g] += float(inst.demand[l])
    cap_fac = {g: inst.fac_cap(g) - fac[g] for g in inst.facilities}
    cap_route = [inst.vehicle_capacity - sum(fac[g] for g in r.stops) for r in partial]
    depot_load = {d: 0.0 for d in inst.depots}
    for r, room in zip(partial, cap_route):
        depot_load[r.depot] += inst.vehicle_capacity - room
    used_depots = sorted({r.depot for r in routes})
    cap_depot = {d: float(inst.depot_capacity[d]) - depot_load[d] for d in used_depots}

    alts = [_alternatives(inst, pr, tuple(r.stops), useful) for pr, r in zip(partial, routes)]
    ext = [[path_cost(inst.c, [pr.depot, *a, pr.depot]) - route_cost(inst, pr) for a in A]
           for pr, A in zip(partial, alts)]
    resident = [frozenset(pr.stops) for pr in partial]

    b = milp.MilpBuilder()
    b.offset = -saving
    y_vars: dict[tuple[int, int], str] = {}
    x_vars: dict[tuple[int, int, int], str] = {}
    yidx: dict[tuple[int, int], int] = {}
    for k, A in enumerate(alts):
        for r in range(len(A)):
            name = f"y_{k}_{r}"
            yidx[(k, r)] = b.var(name, ext[k][r])
            y_vars[(k, r)] = name
    xidx: dict[tuple[int, int, int], int] = {}
    for l in C:
        for k, A in enumerate(alts):
            on_alt = set().union(*A) - resident[k]
            for g in sorted(inst.coverage[l]):
                if g in resident[k] or (g in closed and g in on_alt):
                    name = f"x_{l}_{k}_{g}"
                    xidx[(l, k, g)] = b.var(name)
                    x_vars[(l, k, g)] = name

    q = {l: float(inst.demand[l]) for l in C}
    for l in C:
        b.row({j: 1.0 for (ll, _, _), j in xidx.items() if ll == l}, "=", 1.0)
    for k, A in enumerate(alts):
        on_alt = sorted((set().union(*A) - resident[k]) & closed)
        for g in on_alt:
            serving = [r for r, a in enumerate(A) if g in a]
            xs = [(l, j) for (l, kk, gg), j in xidx.items() if kk == k and gg == g]
            row = {j: q[l] for l, j in xs}
            for r in serving:
                row[yidx[(k, r)]] = row.get(yidx[(k, r)], 0.0) - cap_fac[g]
            b.row(row, "<=", 0.0)
            for l, j in xs:
                if q[l] == 0:
                    link = {j: 1.0}
                    for r in serving:
                        link[yidx[(k, r)]] = -1.0
                    b.row(link, "<=", 0.0)
        for g in sorted(resident[k]):
            row = {j: q[l] for (l, kk, gg), j in xidx.items() if kk == k and gg == g}
            if row:
                b.row(row, "<=", cap_fac[g])
        row = {j: q[l] for (l, kk, _), j in xidx.items() if kk == k}
        if row:
            b.row(row, "<=", cap_route[k])
        ys = {yidx[(k, r)]: 1.0 for r in range(len(A))}
        b.row(ys, "=" if not partial[k].stops else "<=", 1.0)
    for d in used_depots:
        row = {j: q[l] for (l, kk, _), j in xidx.items() if partial[kk].depot == d}
        if row:
            b.row(row, "<=", cap_depot[d])
    for g in useful:
        row = {yidx[(k, r)]: 1.0 for k, A in enumerate(alts) for r, a in enumerate(A) if g in a}
        if row:
            b.row(row, "<=", 1.0)

    warm: dict[str, int] = {}
    route_of = sol.route_of()
    for k, (pr, r) in enumerate(zip(partial, routes)):
        if tuple(pr.stops) != tuple(r.stops):
            warm[y_vars[(k, 0)]] = 1
    for l in C:
        g = sol.assignment[l]
        warm[x_vars[(l, route_of[g], g)]] = 1
    problem = b.build(warm_start=warm)
    return CustomerIpModel(
        f=f, f1=f1, customers=C, partial=partial, alternatives=alts, ext_cost=ext,
        closed=closed, resident=resident, cap_fac=cap_fac, cap_route=cap_route,
        cap_depot=cap_depot, removal_saving=saving, problem=problem,
        x_vars=x_vars, y_vars=y_vars,
    )


def decode_customer_ip(inst: Instance, sol: Solution, model: CustomerIpModel,
                       values: dict[str, int]) -> Solution:
    """Rebuild a solution from an IP point; customer-less facilities are dropped."""
    routes = []
    for k, (pr, A) in enumerate(zip(model.partial, model.alternatives)):
        chosen = [r for r in range(len(A)) if values.get(model.y_vars[(k, r)], 0) == 1]
        stops = list(A[chosen[0]]) if chosen else list(pr.stops)
        routes.append(Route(pr.depot, stops))
    assignment = list(sol.assignment)
    for (l, _, g), name in model.x_vars.items():
        if values.get(name, 0) == 1:
            assignment[l] = g
    served = set(assignment)
    for r in routes:
        r.stops = [g for g in r.stops if g in served]
    return Solution(routes, assignment)


def customer_ip_procedure(inst: Instance, sol: Solution, T: int | None = None,
                          time_limit: float = 5.0) -> Solution:
    """Destroy-and-repair over pairs of nearby open facilities, solved as small IPs."""
    if T is None:
        T = inst.n_facilities
    fixed = fixed_facilities(inst)
    considered: set[int] = set()
    current = evaluate(inst, sol).total
    for it, f in enumerate(sorted(sol.open_facilities())):
        if it >= T:
            break
        if f in considered or f in fixed:
            continue
        considered.add(f)
        open_now = sol.open_facilities()
        if f not in open_now:
            continue
        try:
            f1 = nearest_partner(inst, sol, f, considered | fixed)
        except NoPartnerError:
            continue
        considered.add(f1)
        model = build_customer_ip(inst, sol, f, f1)
        model.problem.time_limit = time_limit
        res = milp.solve(model.problem)
        if res.status != milp.Status.OPTIMAL:
            if res.status != milp.Status.INFEASIBLE:
                log.info("customer IP for (%d, %d) hit its budget; skipped", f, f1)
            continue
        if not res.objective < -EPS * max(1.0, current):
            continue
        assert model.problem.names is not None
        cand = decode_customer_ip(inst, sol, model, res.values(model.problem.names))
        if validate(inst, cand):
            continue
        val = evaluate(inst, cand).total
        if val < current - EPS:
            sol, current = cand, val
    return sol
