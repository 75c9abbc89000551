"""Shared instances for the test-suite."""

from __future__ import annotations

import numpy as np

from ctlrp.core import Instance, Route, Solution, make_instance
from ctlrp.generator import GeneratorConfig, InstanceDiscarded, generate, random_source


def two_depot_instance() -> Instance:
    """Two depots, four facilities; ten unit-demand customers around facilities 2, 3 and 5."""
    depots = [(0, 0), (5, 0)]
    facilities = [(2, 0), (1, 2), (3.8, 2.6), (5, 2)]
    customers = [(2, -0.4), (2.4, -0.4), (2.4, 0),
                 (0.5, 2.4), (1, 2.6), (1.4, 2),
                 (4.4, 2.4), (4.6, 2.8), (5.4, 2.6), (5.8, 2.4)]
    radius = {2: 0.7, 3: 0.8, 4: 1.05, 5: 1.1}
    cov = []
    for cx, cy in customers:
        s = {f for f, r in radius.items()
             if np.hypot(facilities[f - 2][0] - cx, facilities[f - 2][1] - cy) <= r}
        cov.append(s)
    return make_instance(depots, facilities, customers, [1] * 10, cov, n_vehicles=2,
                         vehicle_capacity=10, depot_cost=[1, 1], depot_capacity=[20, 20],
                         facility_capacity=[10, 10, 10, 10], name="two-depot")


def two_depot_solution(inst: Instance) -> Solution:
    assign = []
    for s in inst.coverage:
        assign.append(5 if 5 in s else min(s))
    return Solution([Route(0, [3, 2]), Route(1, [5])], assign)


def tiny_instance(seed: int, n_fac: int = 5, n_dep: int = 2, n_cust: int = 10) -> Instance | None:
    """A generated instance within the exhaustive-oracle size limits, or None when discarded."""
    rng = np.random.default_rng(seed)
    src = random_source(rng, n_fac, n_dep, demand_range=(2, 6))
    try:
        return generate(src, GeneratorConfig(n_customers=n_cust, alpha_index=2, seed=seed,
                                             radius_factors=(0.3, 0.45)))
    except InstanceDiscarded:
        return None


def feasible_pair(seed: int, n_fac: int = 6, n_dep: int = 2, n_cust: int = 12):
    """A tiny instance with a constructed feasible solution, skipping unusable seeds."""
    from ctlrp.construction import ConstructionError, construct

    for s in range(seed * 1000, seed * 1000 + 1000):
        inst = tiny_instance(s, n_fac, n_dep, n_cust)
        if inst is None:
            continue
        try:
            return inst, construct(inst, np.random.default_rng(s))
        except ConstructionError:
            continue
    raise RuntimeError("no feasible instance found")


def mutate(inst: Instance, sol: Solution, rng: np.random.Generator) -> Solution:
    """A random local corruption; the result may or may not be feasible."""
    out = sol.copy()
    kind = int(rng.integers(6))
    facilities = list(inst.facilities)
    if kind == 0:
        l = int(rng.integers(inst.n_customers))
        out.assignment[l] = int(rng.choice(facilities))
    elif kind == 1:
        k1, k2 = rng.integers(len(out.routes), size=2)
        if out.routes[k1].stops:
            f = out.routes[k1].stops.pop(int(rng.integers(len(out.routes[k1].stops))))
            out.routes[k2].stops.insert(int(rng.integers(len(out.routes[k2].stops) + 1)), f)
    elif kind == 2:
        k = int(rng.integers(len(out.routes)))
        out.routes[k].depot = int(rng.integers(inst.n_depots))
    elif kind == 3:
        k = int(rng.integers(len(out.routes)))
        out.routes[k].stops.append(int(rng.choice(facilities)))
    elif kind == 4:
        l = int(rng.integers(inst.n_customers))
        out.assignment[l] = int(rng.choice(sorted(inst.coverage[l])))
    else:
        k = int(rng.integers(len(out.routes)))
        if out.routes[k].stops:
            out.routes[k].stops.pop()
    return out
