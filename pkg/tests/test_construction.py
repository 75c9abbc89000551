import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctlrp.construction import ConstructionError, assign_customers, construct
from ctlrp.core import make_instance, validate
from fixtures import tiny_instance
from oracles import naive_feasible


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_constructed_solutions_are_feasible(seed):
    inst = tiny_instance(seed, n_fac=7, n_dep=2, n_cust=14)
    if inst is None:
        return
    try:
        sol = construct(inst, np.random.default_rng(seed))
    except ConstructionError:
        return
    assert validate(inst, sol) == []
    assert naive_feasible(inst, sol)
    assert len(sol.routes) == inst.n_vehicles


def test_construction_succeeds_on_most_instances():
    ok = total = 0
    for seed in range(100):
        inst = tiny_instance(seed)
        if inst is None:
            continue
        total += 1
        try:
            construct(inst, np.random.default_rng(seed))
            ok += 1
        except ConstructionError:
            pass
    assert ok >= 0.95 * total


def test_deterministic_per_seed():
    inst = tiny_instance(7)
    a = construct(inst, np.random.default_rng(1))
    b = construct(inst, np.random.default_rng(1))
    assert a.key() == b.key()


def test_infeasible_fleet_is_reported():
    # two vehicles of capacity 3 cannot carry 8 units
    inst = make_instance([(0, 0)], [(1, 0), (0, 1)], None, [4, 4], [{1}, {2}],
                         2, 3, [1], [100], [10, 10])
    with pytest.raises(ConstructionError):
        construct(inst, np.random.default_rng(0))


def test_assignment_respects_vehicle_bound_on_large_facilities():
    # facility capacity far above Q must not pull more than Q onto one stop
    inst = make_instance([(0, 0)], [(1, 0), (1, 1)], None, [2, 2, 2], [{1, 2}] * 3,
                         2, 4, [1], [100], [100, 100])
    for seed in range(20):
        assign, opened = assign_customers(inst, np.random.default_rng(seed))
        assert len(opened) >= 2
        loads = {f: sum(2 for a in assign if a == f) for f in opened}
        assert max(loads.values()) <= 4
