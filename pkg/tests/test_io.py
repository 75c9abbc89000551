import json

import numpy as np
import pytest

from ctlrp import io
from ctlrp.core import evaluate
from fixtures import feasible_pair, two_depot_instance, two_depot_solution


def test_instance_round_trip(tmp_path):
    inst, _ = feasible_pair(3)
    path = tmp_path / "i.json"
    io.write_json(io.instance_to_dict(inst), path)
    back = io.load_instance(path)
    assert np.allclose(back.cost, inst.cost)
    assert back.coverage == inst.coverage
    assert np.array_equal(back.demand, inst.demand)
    assert back.n_vehicles == inst.n_vehicles and back.vehicle_capacity == inst.vehicle_capacity
    assert io.dumps(io.instance_to_dict(back)) == io.dumps(io.instance_to_dict(inst))


def test_solution_round_trip(tmp_path):
    inst = two_depot_instance()
    sol = two_depot_solution(inst)
    path = tmp_path / "s.json"
    io.write_json(io.solution_to_dict(sol), path)
    back = io.load_solution(path)
    assert back.key() == sol.key()
    assert evaluate(inst, back) == evaluate(inst, sol)


def test_every_output_carries_schema_version():
    inst = two_depot_instance()
    assert io.instance_to_dict(inst)["schema_version"] == io.SCHEMA_VERSION
    assert io.solution_to_dict(two_depot_solution(inst))["schema_version"] == io.SCHEMA_VERSION


def test_explicit_cost_matrix_wins():
    d = io.instance_to_dict(two_depot_instance(), include_costs=True)
    d["cost_matrix"][0][2] = d["cost_matrix"][2][0] = 99.0
    assert io.instance_from_dict(d).cost[0, 2] == 99.0


@pytest.mark.parametrize("mutation", [
    lambda d: d.pop("M"),
    lambda d: d["depots"][0].update(id=5),
    lambda d: d["customers"][0].pop("coverage"),
])
def test_schema_errors(mutation):
    d = io.instance_to_dict(two_depot_instance())
    mutation(d)
    with pytest.raises(io.SchemaError):
        io.instance_from_dict(d)


def test_bad_solution_keys(tmp_path):
    with pytest.raises(io.SchemaError):
        io.solution_from_dict({"routes": [{"depot": 0, "stops": [2]}], "assignment": {"1": 2}})
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"routes": "x"}))
    with pytest.raises(io.SchemaError):
        io.load_solution(p)
