"""Depot-to-route reassignment as a single-source capacitated facility location IP."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import milp
from .core import EPS, Instance, Route, Solution, evaluate, facility_loads, route_cost

log = logging.getLogger(__name__)


def best_anchor(inst: Instance, stops: list[int], depot: int) -> tuple[float, list[int]]:
    """Cheapest way to close ``stops`` into a tour through ``depot``.

    The stop sequence is read as a cycle and the depot is inserted into each
    of its edges; both orientations cost the same under symmetric costs.
    Returns the route cost and the re-anchored stop order.
    """
    c = inst.c
    n = len(stops)
    if n == 1:
        return 2 * c[depot][stops[0]], list(stops)
    cycle = sum(c[stops[t]][stops[(t + 1) % n]] for t in range(n))
    best, best_t = None, 0
    for t in range(n):
        u, v = stops[t], stops[(t + 1) % n]
        val = cycle - c[u][v] + c[depot][u] + c[depot][v]
        if best is None or val < best - 1e-12:
            best, best_t = val, t
    order = stops[best_t + 1:] + stops[:best_t + 1]
    return best, order


@dataclass
class DepotReassignModel:
    delta: np.ndarray  # Δc_rd, shape (routes, depots)
    orders: list[list[list[int]]]  # re-anchored stop order per (route, depot)
    route_demand: np.ndarray  # d_r
    depot_cost: np.ndarray
    depot_capacity: np.ndarray
    problem: milp.MilpProblem

    def var_names(self) -> list[str]:
        assert self.problem.names is not None
        return self.problem.names


def build_depot_model(inst: Instance, sol: Solution) -> DepotReassignModel:
    loads = facility_loads(inst, sol.assignment)
    R, D = len(sol.routes), inst.n_depots
    delta = np.zeros((R, D))
    orders: list[list[list[int]]] = []
    dem = np.array([sum(loads[f] for f in r.stops) for r in sol.routes], dtype=float)
    for k, r in enumerate(sol.routes):
        cur = route_cost(inst, r)
        row = []
        for d in inst.depots:
            if r.stops:
                val, order = best_anchor(inst, r.stops, d)
            else:
                val, order = 0.0, []
            delta[k, d] = val - cur
            row.append(order)
        orders.append(row)

    b = milp.MilpBuilder()
    y = [b.var(f"y_{d}", float(inst.depot_cost[d])) for d in inst.depots]
    x = [[b.var(f"x_{k}_{d}", float(delta[k, d])) for d in inst.depots] for k in range(R)]
    for k in range(R):
        b.row({x[k][d]: 1.0 for d in inst.depots}, "=", 1.0)
    for d in inst.depots:
        coeffs = {x[k][d]: float(dem[k]) for k in range(R)}
        coeffs[y[d]] = coeffs.get(y[d], 0.0) - float(inst.depot_capacity[d])
        b.row(coeffs, "<=", 0.0)
    for k in range(R):
        for d in inst.depots:
            b.row({x[k][d]: 1.0, y[d]: -1.0}, "<=", 0.0)
    warm = {f"x_{k}_{r.depot}": 1 for k, r in enumerate(sol.routes)}
    warm.update({f"y_{r.depot}": 1 for r in sol.routes})
    problem = b.build(warm_start=warm)
    return DepotReassignModel(delta, orders, dem, inst.depot_cost, inst.depot_capacity, problem)


@dataclass
class DepotReassignResult:
    solution: Solution
    changed: bool
    timed_out: bool = False


def reassign_depots(inst: Instance, sol: Solution, time_limit: float = 5.0) -> DepotReassignResult:
    """Solve the reassignment IP; apply it when it beats the current depot cost."""
    if inst.n_depots == 1:
        return DepotReassignResult(sol, False)
    model = build_depot_model(inst, sol)
    model.problem.time_limit = time_limit
    res = milp.solve(model.problem)
    if res.status not in (milp.Status.OPTIMAL, milp.Status.FEASIBLE_BUDGET_HIT):
        log.warning("depot IP returned %s; solution unchanged", res.status.value)
        return DepotReassignResult(sol, False, timed_out=res.status != milp.Status.INFEASIBLE)
    current = evaluate(inst, sol).depot_cost
    if not res.objective < current - EPS * max(1.0, abs(current)):
        return DepotReassignResult(sol, False, res.status != milp.Status.OPTIMAL)
    vals = res.values(model.var_names())
    routes = []
    for k, r in enumerate(sol.routes):
        d = next(d for d in inst.depots if vals[f"x_{k}_{d}"] == 1)
        routes.append(Route(d, list(model.orders[k][d])))
    return DepotReassignResult(Solution(routes, list(sol.assignment)), True,
                               res.status != milp.Status.OPTIMAL)
