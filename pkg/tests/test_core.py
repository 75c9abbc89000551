import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctlrp.core import (
    MalformedSolutionError,
    Route,
    Solution,
    evaluate,
    make_instance,
    route_loads,
    validate,
)
from fixtures import feasible_pair, two_depot_instance, two_depot_solution, mutate
from oracles import naive_cost, naive_feasible


def test_two_depot_solution_is_feasible():
    inst = two_depot_instance()
    assert validate(inst, two_depot_solution(inst)) == []


def test_two_depot_solution_cost_matches_hand_sum():
    inst = two_depot_instance()
    cost = evaluate(inst, two_depot_solution(inst))
    c = inst.cost
    assert cost.routing_cost == pytest.approx(c[0, 3] + c[3, 2] + c[2, 0] + c[1, 5] + c[5, 1], abs=1e-12)
    assert cost.routing_cost == pytest.approx(2 * math.sqrt(5) + 2 + 4, abs=1e-12)
    assert cost.depot_cost == 2.0
    assert cost.total == cost.routing_cost + cost.depot_cost


def test_two_depot_route_loads():
    inst = two_depot_instance()
    sol = two_depot_solution(inst)
    assert route_loads(inst, sol, sol.routes[0]) == [6, 3, 0]


def test_single_route_total():
    cost = np.array([[0, 5], [5, 0]], dtype=float)
    inst = make_instance([(0, 0)], [(5, 0)], None, [1], [{1}], 1, 10, [2], [10], [10], cost=cost)
    assert evaluate(inst, Solution([Route(0, [1])], [1])).total == 12


def test_depot_cost_charged_once():
    inst = two_depot_instance()
    sol = two_depot_solution(inst)
    both = Solution([Route(0, [3, 2]), Route(0, [5])], sol.assignment)
    assert evaluate(inst, both).depot_cost == 1.0


def test_zero_demand_facility_keeps_load():
    inst = make_instance([(0, 0)], [(1, 0), (2, 0)], None, [0, 3], [{1}, {2}], 1, 10, [0], [10], [5, 5])
    sol = Solution([Route(0, [1, 2])], [1, 2])
    assert route_loads(inst, sol, sol.routes[0]) == [3, 3, 0]


def test_single_coverage_violation():
    inst = two_depot_instance()
    sol = two_depot_solution(inst)
    sol.assignment[0] = 3
    rules = [v.rule for v in validate(inst, sol)]
    assert rules.count("coverage") == 1


def test_named_rules():
    inst = two_depot_instance()
    base = two_depot_solution(inst)
    sol = base.copy()
    sol.routes.append(Route(0, []))
    assert {v.rule for v in validate(inst, sol)} >= {"fleet-size", "empty-route"}
    assert "empty-route" not in {v.rule for v in validate(inst, sol, strict=False)}
    sol = base.copy()
    sol.routes[1].stops.append(4)
    assert "idle-facility" in {v.rule for v in validate(inst, sol)}
    sol = base.copy()
    sol.routes[1].stops = [5, 3]
    assert "multi-visit" in {v.rule for v in validate(inst, sol)}
    sol = base.copy()
    sol.routes[0].stops = [3]
    assert "unrouted-facility" in {v.rule for v in validate(inst, sol)}
    sol = base.copy()
    sol.routes[0].depot = 7
    assert "unknown-depot" in {v.rule for v in validate(inst, sol)}


def test_capacity_rules():
    inst = make_instance([(0, 0)], [(1, 0), (2, 0)], None, [4, 4], [{1}, {2}], 1, 6, [0], [7], [3, 5])
    rules = {v.rule for v in validate(inst, Solution([Route(0, [1, 2])], [1, 2]))}
    assert rules == {"facility-capacity", "vehicle-capacity", "depot-capacity"}


def test_evaluate_rejects_unknown_ids():
    inst = two_depot_instance()
    with pytest.raises(MalformedSolutionError):
        evaluate(inst, Solution([Route(0, [42])], [2] * 10))


@pytest.mark.parametrize("kw", [
    {"coverage": [set()]},
    {"coverage": [{7}]},
    {"depot_capacity": [0]},
    {"demand": [-1]},
    {"cost": np.array([[0, 1], [2, 0]], dtype=float)},
    {"n_vehicles": 0},
])
def test_instance_invariants(kw):
    args = dict(depot_xy=[(0, 0)], facility_xy=[(1, 0)], customer_xy=None, demand=[1],
                coverage=[{1}], n_vehicles=1, vehicle_capacity=5, depot_cost=[1],
                depot_capacity=[5], facility_capacity=[5])
    args.update(kw)
    with pytest.raises(ValueError):
        make_instance(**args)


def test_instance_arrays_are_read_only():
    inst = two_depot_instance()
    with pytest.raises(ValueError):
        inst.demand[0] = 5


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 40), st.integers(0, 2**31))
def test_evaluate_matches_naive_walk(seed, mseed):
    inst, sol = feasible_pair(seed)
    rng = np.random.default_rng(mseed)
    for _ in range(5):
        cand = mutate(inst, sol, rng)
        if all(inst.is_depot(r.depot) for r in cand.routes):
            assert evaluate(inst, cand).total == pytest.approx(naive_cost(inst, cand), abs=1e-9)


def test_validator_agrees_with_independent_checker():
    rng = np.random.default_rng(7)
    agree = 0
    for k in range(1000):
        inst, sol = feasible_pair(k % 25)
        cand = sol
        for _ in range(int(rng.integers(0, 3))):
            cand = mutate(inst, cand, rng)
        assert (validate(inst, cand) == []) == naive_feasible(inst, cand)
        agree += 1
    assert agree == 1000


def test_feasible_solutions_route_all_demand():
    for seed in range(20):
        inst, sol = feasible_pair(seed)
        total = sum(route_loads(inst, sol, r)[0] for r in sol.routes)
        assert total == pytest.approx(inst.total_demand)
        for r in sol.routes:
            loads = route_loads(inst, sol, r)
            assert min(loads) >= 0 and loads[0] <= inst.vehicle_capacity + 1e-9
