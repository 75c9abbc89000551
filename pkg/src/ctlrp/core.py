"""Instance and solution model for the covering tour location routing problem.

Node numbering follows one global index space: depots occupy ``0..n_depots-1``
and facilities ``n_depots..n_depots+n_facilities-1``.  Routes store facility
node ids, so ``inst.cost[a, b]`` works for any pair of route nodes.  Customers
are numbered separately, ``0..n_customers-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

EPS = 1e-9


class MalformedSolutionError(ValueError):
    """Raised when a solution references unknown ids or is structurally broken."""


@dataclass(frozen=True, eq=False)
class Instance:
    depot_cost: np.ndarray  # c_d, shape (n_depots,)
    depot_capacity: np.ndarray  # Q^D_d, shape (n_depots,)
    facility_capacity: np.ndarray  # Q^F_i, shape (n_facilities,)
    demand: np.ndarray  # q_l, shape (n_customers,)
    coverage: tuple[frozenset[int], ...]  # F_l as facility node ids
    n_vehicles: int  # M
    vehicle_capacity: float  # Q
    cost: np.ndarray  # symmetric, over depot and facility nodes
    depot_xy: np.ndarray | None = None
    facility_xy: np.ndarray | None = None
    customer_xy: np.ndarray | None = None
    name: str = ""

    def __post_init__(self) -> None:
        for arr in (self.depot_cost, self.depot_capacity, self.facility_capacity,
                    self.demand, self.cost):
            arr.setflags(write=False)
        n_nodes = self.n_depots + self.n_facilities
        if self.cost.shape != (n_nodes, n_nodes):
            raise ValueError(f"cost matrix must be {n_nodes}x{n_nodes}, got {self.cost.shape}")
        if len(self.coverage) != len(self.demand):
            raise ValueError("one coverage set per customer required")
        if self.n_vehicles < 1:
            raise ValueError("fleet size must be at least 1")
        if not self.vehicle_capacity > 0:
            raise ValueError("vehicle capacity must be positive")
        if np.any(self.depot_capacity <= 0):
            raise ValueError("depot capacities must be strictly positive")
        # a facility covering nobody legitimately ends up with capacity 0
        if np.any(self.facility_capacity < 0):
            raise ValueError("facility capacities must be nonnegative")
        if np.any(self.demand < 0):
            raise ValueError("demands must be nonnegative")
        if not np.allclose(self.cost, self.cost.T, rtol=0, atol=EPS):
            raise ValueError("travel costs must be symmetric")
        if np.any(self.cost < 0) or np.any(np.abs(np.diag(self.cost)) > EPS):
            raise ValueError("travel costs must be nonnegative with zero diagonal")
        facs = set(self.facilities)
        for l, cov in enumerate(self.coverage):
            if not cov:
                raise ValueError(f"customer {l} has an empty coverage set")
            if not cov <= facs:
                raise ValueError(f"customer {l} covered by unknown facility ids {sorted(cov - facs)}")

    @cached_property
    def c(self) -> list[list[float]]:
        """Travel costs as nested lists; scalar lookups here are much cheaper than numpy indexing."""
        return self.cost.tolist()

    @property
    def n_depots(self) -> int:
        return len(self.depot_cost)

    @property
    def n_facilities(self) -> int:
        return len(self.facility_capacity)

    @property
    def n_customers(self) -> int:
        return len(self.demand)

    @property
    def depots(self) -> range:
        return range(self.n_depots)

    @property
    def facilities(self) -> range:
        return range(self.n_depots, self.n_depots + self.n_facilities)

    @property
    def customers(self) -> range:
        return range(self.n_customers)

    def is_depot(self, node: int) -> bool:
        return 0 <= node < self.n_depots

    def is_facility(self, node: int) -> bool:
        return self.n_depots <= node < self.n_depots + self.n_facilities

    def fac_cap(self, f: int) -> float:
        return self.facility_capacity[f - self.n_depots]

    @property
    def total_demand(self) -> float:
        return float(self.demand.sum())

    def coverers(self) -> dict[int, list[int]]:
        """Facility id -> customers it can cover."""
        out: dict[int, list[int]] = {f: [] for f in self.facilities}
        for l, cov in enumerate(self.coverage):
            for f in cov:
                out[f].append(l)
        return out


@dataclass
class Route:
    depot: int
    stops: list[int] = field(default_factory=list)

    def path(self) -> list[int]:
        return [self.depot, *self.stops, self.depot]

    def copy(self) -> Route:
        return Route(self.depot, list(self.stops))


@dataclass
class Solution:
    routes: list[Route]
    assignment: list[int]  # customer -> facility node id

    def copy(self) -> Solution:
        return Solution([r.copy() for r in self.routes], list(self.assignment))

    def open_facilities(self) -> set[int]:
        return {f for r in self.routes for f in r.stops}

    def route_of(self) -> dict[int, int]:
        """Facility id -> index of the route visiting it."""
        return {f: k for k, r in enumerate(self.routes) for f in r.stops}

    def customers_of(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for l, f in enumerate(self.assignment):
            out.setdefault(f, []).append(l)
        return out

    def key(self) -> tuple:
        return (tuple((r.depot, tuple(r.stops)) for r in self.routes), tuple(self.assignment))


@dataclass(frozen=True)
class CostBreakdown:
    routing_cost: float
    depot_cost: float

    @property
    def total(self) -> float:
        return self.routing_cost + self.depot_cost


@dataclass(frozen=True)
class Violation:
    rule: str
    ids: tuple
    detail: str = ""


def path_cost(c: list[list[float]], path: Sequence[int]) -> float:
    return float(sum(c[a][b] for a, b in zip(path, path[1:])))


def route_cost(inst: Instance, route: Route) -> float:
    if not route.stops:
        return 0.0
    return path_cost(inst.c, route.path())


def _check_structure(inst: Instance, sol: Solution) -> None:
    for k, r in enumerate(sol.routes):
        if not inst.is_depot(r.depot):
            raise MalformedSolutionError(f"route {k} anchored at unknown depot {r.depot}")
        for f in r.stops:
            if not inst.is_facility(f):
                raise MalformedSolutionError(f"route {k} visits unknown facility {f}")
    if len(sol.assignment) != inst.n_customers:
        raise MalformedSolutionError("assignment must cover every customer")


def evaluate(inst: Instance, sol: Solution) -> CostBreakdown:
    """Routing cost of all routes plus c_d once per depot anchoring a nonempty route."""
    _check_structure(inst, sol)
    routing = sum(route_cost(inst, r) for r in sol.routes)
    used = {r.depot for r in sol.routes if r.stops}
    depot = float(sum(inst.depot_cost[d] for d in sorted(used)))
    return CostBreakdown(float(routing), depot)


def facility_loads(inst: Instance, assignment: Sequence[int]) -> dict[int, float]:
    loads = {f: 0.0 for f in inst.facilities}
    for l, f in enumerate(assignment):
        loads[f] = loads.get(f, 0.0) + float(inst.demand[l])
    return loads


def route_demand(route: Route, loads: dict[int, float]) -> float:
    return sum(loads[f] for f in route.stops)


def route_loads(inst: Instance, sol: Solution, route: Route) -> list[float]:
    """Vehicle load on each edge of ``route``, from the depot edge to the return edge."""
    loads = facility_loads(inst, sol.assignment)
    current = route_demand(route, loads)
    out = [current]
    for f in route.stops:
        current -= loads[f]
        out.append(current)
    return out


def validate(inst: Instance, sol: Solution, strict: bool = True) -> list[Violation]:
    """Return every broken feasibility rule; an empty list means feasible.

    ``strict=False`` tolerates routes without stops, which only occur in
    intermediate heuristic states.
    """
    out: list[Violation] = []
    if len(sol.routes) != inst.n_vehicles:
        out.append(Violation("fleet-size", (len(sol.routes),),
                             f"expected {inst.n_vehicles} routes"))
    bad_structure = False
    for k, r in enumerate(sol.routes):
        if not inst.is_depot(r.depot):
            out.append(Violation("unknown-depot", (k, r.depot)))
            bad_structure = True
        for f in r.stops:
            if not inst.is_facility(f):
                out.append(Violation("unknown-facility", (k, f)))
                bad_structure = True
        if strict and not r.stops:
            out.append(Violation("empty-route", (k,)))
        if len(set(r.stops)) != len(r.stops):
            out.append(Violation("repeated-stop", (k,)))
    if len(sol.assignment) != inst.n_customers:
        out.append(Violation("assignment-size", (len(sol.assignment),)))
        return out
    for l, f in enumerate(sol.assignment):
        if f not in inst.coverage[l]:
            out.append(Violation("coverage", (l, f), "customer assigned outside its coverage set"))
    if bad_structure:
        return out

    visits: dict[int, list[int]] = {}
    for k, r in enumerate(sol.routes):
        for f in r.stops:
            visits.setdefault(f, []).append(k)
    for f, ks in sorted(visits.items()):
        if len(ks) > 1:
            out.append(Violation("multi-visit", (f, *ks)))

    loads = {f: 0.0 for f in inst.facilities}
    served: set[int] = set()
    for l, f in enumerate(sol.assignment):
        if inst.is_facility(f):
            loads[f] += float(inst.demand[l])
            served.add(f)
    for f in sorted(served - visits.keys()):
        out.append(Violation("unrouted-facility", (f,), "facility serves customers but is not visited"))
    for f in sorted(visits.keys() - served):
        out.append(Violation("idle-facility", (f,), "visited facility has no assigned customer"))
    for f in inst.facilities:
        if loads[f] > inst.fac_cap(f) + EPS:
            out.append(Violation("facility-capacity", (f,), f"{loads[f]} > {inst.fac_cap(f)}"))

    depot_load = {d: 0.0 for d in inst.depots}
    for k, r in enumerate(sol.routes):
        dem = route_demand(r, loads)
        depot_load[r.depot] += dem
        if dem > inst.vehicle_capacity + EPS:
            out.append(Violation("vehicle-capacity", (k,), f"{dem} > {inst.vehicle_capacity}"))
    for d in inst.depots:
        if depot_load[d] > inst.depot_capacity[d] + EPS:
            out.append(Violation("depot-capacity", (d,), f"{depot_load[d]} > {inst.depot_capacity[d]}"))
    return out


def is_feasible(inst: Instance, sol: Solution, strict: bool = True) -> bool:
    return not validate(inst, sol, strict=strict)


def euclidean_costs(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def make_instance(
    depot_xy: Iterable[Sequence[float]],
    facility_xy: Iterable[Sequence[float]],
    customer_xy: Iterable[Sequence[float]] | None,
    demand: Sequence[float],
    coverage: Sequence[Iterable[int]],
    n_vehicles: int,
    vehicle_capacity: float,
    depot_cost: Sequence[float],
    depot_capacity: Sequence[float],
    facility_capacity: Sequence[float],
    cost: np.ndarray | None = None,
    name: str = "",
) -> Instance:
    """Build an instance, deriving Euclidean travel costs when ``cost`` is omitted."""
    dxy = np.asarray(list(depot_xy), dtype=float).reshape(-1, 2)
    fxy = np.asarray(list(facility_xy), dtype=float).reshape(-1, 2)
    cxy = None if customer_xy is None else np.asarray(list(customer_xy), dtype=float).reshape(-1, 2)
    if cost is None:
        cost = euclidean_costs(np.vstack([dxy, fxy]))
    return Instance(
        depot_cost=np.asarray(depot_cost, dtype=float),
        depot_capacity=np.asarray(depot_capacity, dtype=float),
        facility_capacity=np.asarray(facility_capacity, dtype=float),
        demand=np.asarray(demand, dtype=float),
        coverage=tuple(frozenset(int(f) for f in c) for c in coverage),
        n_vehicles=int(n_vehicles),
        vehicle_capacity=float(vehicle_capacity),
        cost=np.asarray(cost, dtype=float),
        depot_xy=dxy,
        facility_xy=fxy,
        customer_xy=cxy,
        name=name,
    )


def total_cost(inst: Instance, sol: Solution) -> float:
    return evaluate(inst, sol).total


def isclose(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=1e-9 * max(1.0, abs(a), abs(b)))
