import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctlrp import milp
from oracles import brute_force_binary


def problem(c, A, senses, b, **kw):
    return milp.MilpProblem(np.asarray(c, float), np.asarray(A, float).reshape(len(senses), len(c)),
                            list(senses), np.asarray(b, float), **kw)


def test_cover_one():
    res = milp.solve(problem([1, 1], [[1, 1]], [">="], [1]))
    assert res.status == milp.Status.OPTIMAL and res.objective == 1


def test_unconstrained_positive_costs():
    res = milp.solve(problem([3, 1, 2], np.zeros((0, 3)), [], []))
    assert res.objective == 0 and list(res.x) == [0, 0, 0]


def test_infeasible():
    res = milp.solve(problem([1], [[1], [1]], ["<=", ">="], [0, 1]))
    assert res.status == milp.Status.INFEASIBLE and res.x is None


def test_offset_and_names():
    b = milp.MilpBuilder()
    x = b.var("x", -2)
    y = b.var("y", 1)
    b.row({x: 1, y: -1}, "<=", 0)
    b.offset = 5
    res = milp.solve(b.build())
    assert res.objective == 4
    assert res.values(["x", "y"]) == {"x": 1, "y": 1}


def test_malformed_problems():
    with pytest.raises(milp.MalformedProblemError):
        milp.solve(problem([1, np.nan], [[1, 1]], ["<="], [1]))
    with pytest.raises(milp.MalformedProblemError):
        milp.solve(problem([1, 0], [[1, 0]], ["<="], [1]))  # second variable unused
    with pytest.raises(milp.MalformedProblemError):
        milp.solve(problem([1], [[1]], ["<"], [1]))
    with pytest.raises(milp.MalformedProblemError):
        milp.MilpBuilder().row({}, "!=", 0)


def test_warm_start_survives_tiny_budget():
    rng = np.random.default_rng(0)
    n = 14
    c = -rng.uniform(1, 10, n)
    w = rng.uniform(1, 10, n)
    ws = np.zeros(n)
    res = milp.solve(problem(c, [w], ["<="], [w.sum() / 3], warm_start=ws, node_limit=1))
    assert res.status == milp.Status.FEASIBLE_BUDGET_HIT
    assert res.bound <= res.objective + 1e-9
    res = milp.solve(problem(c, [w], ["<="], [w.sum() / 3], node_limit=0))
    assert res.status == milp.Status.BUDGET_HIT_NO_SOLUTION


def random_problem(rng, n):
    m = int(rng.integers(1, 6))
    c = rng.integers(-10, 11, n).astype(float)
    A = rng.integers(-5, 6, (m, n)).astype(float)
    A[:, np.all(A == 0, axis=0) & (c == 0)] = 1
    senses = [["<=", ">=", "="][int(rng.choice(3, p=[0.6, 0.3, 0.1]))] for _ in range(m)]
    x0 = rng.integers(0, 2, n)
    b = A @ x0 + np.where(np.array(senses) == "<=", rng.integers(0, 4, m),
                          np.where(np.array(senses) == ">=", -rng.integers(0, 4, m), 0))
    if rng.random() < 0.1:
        b = b - 100 * (np.array(senses) != ">=") + 100 * (np.array(senses) == ">=")
    return c, A, senses, b.astype(float)


def test_matches_brute_force_on_random_problems():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(1, 16))
        c, A, senses, b = random_problem(rng, n)
        best, _ = brute_force_binary(c, A, senses, b)
        res = milp.solve(problem(c, A, senses, b))
        if best is None:
            assert res.status == milp.Status.INFEASIBLE
        else:
            assert res.status == milp.Status.OPTIMAL
            assert res.objective == pytest.approx(best, abs=1e-9)
            assert abs(res.objective - res.bound) <= 1e-6
            assert milp.is_feasible_point(problem(c, A, senses, b), res.x)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_incumbents_monotone(seed):
    rng = np.random.default_rng(seed)
    c, A, senses, b = random_problem(rng, int(rng.integers(2, 12)))
    res = milp.solve(problem(c, A, senses, b))
    assert all(a > b_ for a, b_ in zip(res.incumbents, res.incumbents[1:]))
    if res.x is not None:
        assert res.bound <= res.objective + 1e-9
