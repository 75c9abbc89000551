"""Canonical JSON text schema for instances, solutions and run reports.

Instance::

    {"schema_version": 1, "name": ..., "M": 2, "Q": 10,
     "depots": [{"id": 0, "x": .., "y": .., "cost": .., "capacity": ..}, ...],
     "facilities": [{"id": 2, "x": .., "y": .., "capacity": ..}, ...],
     "customers": [{"id": 0, "x": .., "y": .., "demand": .., "coverage": [2, 3]}, ...],
     "cost_matrix": [[...], ...]}          # optional

Facility ids continue after the depot ids.  Travel costs are recomputed as
Euclidean distances unless ``cost_matrix`` is present.

Solution::

    {"schema_version": 1, "routes": [{"depot": 0, "stops": [3, 2]}, ...],
     "assignment": {"0": 3, "1": 3, ...}}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import Instance, Route, Solution, make_instance

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _num(v: float) -> int | float:
    v = float(v)
    return int(v) if v.is_integer() else v


def instance_to_dict(inst: Instance, include_costs: bool = False) -> dict[str, Any]:
    nd = inst.n_depots
    dxy = inst.depot_xy if inst.depot_xy is not None else np.zeros((nd, 2))
    fxy = inst.facility_xy if inst.facility_xy is not None else np.zeros((inst.n_facilities, 2))
    cxy = inst.customer_xy if inst.customer_xy is not None else np.zeros((inst.n_customers, 2))
    out: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "M": inst.n_vehicles,
        "Q": _num(inst.vehicle_capacity),
        "depots": [
            {"id": d, "x": float(dxy[d, 0]), "y": float(dxy[d, 1]),
             "cost": _num(inst.depot_cost[d]), "capacity": _num(inst.depot_capacity[d])}
            for d in inst.depots
        ],
        "facilities": [
            {"id": f, "x": float(fxy[f - nd, 0]), "y": float(fxy[f - nd, 1]),
             "capacity": _num(inst.fac_cap(f))}
            for f in inst.facilities
        ],
        "customers": [
            {"id": l, "x": float(cxy[l, 0]), "y": float(cxy[l, 1]),
             "demand": _num(inst.demand[l]), "coverage": sorted(inst.coverage[l])}
            for l in inst.customers
        ],
    }
    if include_costs or inst.depot_xy is None or inst.facility_xy is None:
        out["cost_matrix"] = inst.cost.tolist()
    return out


def instance_from_dict(data: dict[str, Any]) -> Instance:
    try:
        depots = sorted(data["depots"], key=lambda d: d["id"])
        facilities = sorted(data["facilities"], key=lambda f: f["id"])
        customers = sorted(data["customers"], key=lambda c: c["id"])
        nd = len(depots)
        if [d["id"] for d in depots] != list(range(nd)):
            raise SchemaError("depot ids must be 0..n_depots-1")
        if [f["id"] for f in facilities] != list(range(nd, nd + len(facilities))):
            raise SchemaError("facility ids must follow the depot ids contiguously")
        if [c["id"] for c in customers] != list(range(len(customers))):
            raise SchemaError("customer ids must be 0..n_customers-1")
        cost = data.get("cost_matrix")
        return make_instance(
            depot_xy=[(d.get("x", 0.0), d.get("y", 0.0)) for d in depots],
            facility_xy=[(f.get("x", 0.0), f.get("y", 0.0)) for f in facilities],
            customer_xy=[(c.get("x", 0.0), c.get("y", 0.0)) for c in customers],
            demand=[c["demand"] for c in customers],
            coverage=[c["coverage"] for c in customers],
            n_vehicles=data["M"],
            vehicle_capacity=data["Q"],
            depot_cost=[d["cost"] for d in depots],
            depot_capacity=[d["capacity"] for d in depots],
            facility_capacity=[f["capacity"] for f in facilities],
            cost=None if cost is None else np.asarray(cost, dtype=float),
            name=data.get("name", ""),
        )
    except KeyError as exc:
        raise SchemaError(f"missing field {exc}") from exc


def solution_to_dict(sol: Solution) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "routes": [{"depot": r.depot, "stops": list(r.stops)} for r in sol.routes],
        "assignment": {str(l): f for l, f in enumerate(sol.assignment)},
    }


def solution_from_dict(data: dict[str, Any]) -> Solution:
    try:
        routes = [Route(int(r["depot"]), [int(f) for f in r["stops"]]) for r in data["routes"]]
        amap = {int(k): int(v) for k, v in data["assignment"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed solution: {exc}") from exc
    if sorted(amap) != list(range(len(amap))):
        raise SchemaError("assignment keys must be 0..n_customers-1")
    return Solution(routes, [amap[l] for l in range(len(amap))])


def dumps(obj: dict[str, Any]) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def write_json(obj: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(read_json(path))


def load_solution(path: str | Path) -> Solution:
    return solution_from_dict(read_json(path))
