import numpy as np
import pytest

from ctlrp.core import Route, Solution, evaluate, make_instance, validate
from ctlrp.intra import find_intra, relocate_intra, swap_intra, two_opt
from ctlrp.moves import apply_move
from fixtures import feasible_pair
from oracles import best_neighbor_delta, intra_neighbors, naive_cost

OPS = {"2opt": two_opt, "swap": swap_intra, "relocate": relocate_intra}


def line_instance(points, cost=None):
    """One depot at the first point; one facility (and customer) per remaining point."""
    n = len(points) - 1
    return make_instance(points[:1], points[1:], None, [1] * n, [{i + 1} for i in range(n)],
                         1, 100, [0], [100], [10] * n, cost=cost)


def test_two_opt_uncrosses_square():
    inst = line_instance([(0, 0), (0, 1), (1, 0), (1, 1), (0, 2)])
    sol = Solution([Route(0, [1, 2, 3, 4])], [1, 2, 3, 4])
    mv = two_opt(inst, sol, 0)
    assert mv is not None and mv.delta < 0
    new = apply_move(sol, mv)
    assert evaluate(inst, new).total - evaluate(inst, sol).total == pytest.approx(mv.delta, abs=1e-12)
    assert two_opt(inst, new, 0) is None


def test_two_opt_needs_four_edges():
    inst = line_instance([(0, 0), (0, 1), (1, 0)])
    assert two_opt(inst, Solution([Route(0, [2, 1])], [1, 2]), 0) is None


def test_symmetric_two_stop_route_has_no_improving_swap_or_relocate():
    inst = line_instance([(0, 0), (3, 1), (1, 4)])
    sol = Solution([Route(0, [1, 2])], [1, 2])
    assert swap_intra(inst, sol, 0) is None
    assert relocate_intra(inst, sol, 0) is None


def test_single_stop_route_has_no_swap():
    inst = line_instance([(0, 0), (3, 1)])
    assert swap_intra(inst, Solution([Route(0, [1])], [1]), 0) is None


def test_contrived_swap_and_relocate():
    # on a line 0 - 1 - 2 - 3, visiting out of order is improved by both operators
    inst = line_instance([(0, 0), (1, 0), (2, 0), (3, 0)])
    sol = Solution([Route(0, [2, 1, 3])], [1, 2, 3])
    for fn in (swap_intra, relocate_intra):
        mv = fn(inst, sol, 0)
        new = apply_move(sol, mv)
        assert new.routes[0].stops in ([1, 2, 3], [3, 2, 1])
        assert naive_cost(inst, new) - naive_cost(inst, sol) == pytest.approx(mv.delta, abs=1e-12)


@pytest.mark.parametrize("op", sorted(OPS))
def test_best_accept_equals_full_enumeration(op):
    checked = 0
    for seed in range(100):
        pair = feasible_pair(seed, n_fac=8, n_dep=1, n_cust=16)
        if pair is None:
            continue
        inst, sol = pair
        sol = Solution([Route(sol.routes[0].depot, [f for r in sol.routes for f in r.stops])]
                       + [Route(r.depot, []) for r in sol.routes[1:]], sol.assignment)
        mv = OPS[op](inst, sol, 0, "best")
        ref = best_neighbor_delta_relaxed(inst, sol, op)
        if ref is None:
            assert mv is None
        else:
            checked += 1
            assert mv.delta == pytest.approx(ref, abs=1e-9)
    assert checked > 10


def best_neighbor_delta_relaxed(inst, sol, op):
    base = naive_cost(inst, sol)
    best = None
    for stops in intra_neighbors(sol, 0, op):
        cand = sol.copy()
        cand.routes[0].stops = stops
        d = naive_cost(inst, cand) - base
        if d < -1e-9 and (best is None or d < best):
            best = d
    return best


@pytest.mark.parametrize("op", sorted(OPS))
@pytest.mark.parametrize("accept", ["first", "best"])
def test_deltas_and_feasibility(op, accept):
    for seed in range(30):
        inst, sol = feasible_pair(seed)
        for apply in ("first", "best"):
            mv = find_intra(inst, sol, op, accept, apply)
            if mv is None:
                ref = [best_neighbor_delta(inst, sol, ({k: s} for s in intra_neighbors(sol, k, op)))
                       for k in range(len(sol.routes))]
                assert all(r is None for r in ref)
                continue
            new = apply_move(sol, mv)
            assert validate(inst, new) == []
            assert naive_cost(inst, new) - naive_cost(inst, sol) == pytest.approx(mv.delta, abs=1e-9)
            assert mv.delta < 0


def test_first_accept_takes_first_improving_in_scan_order():
    inst = line_instance([(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)])
    sol = Solution([Route(0, [2, 1, 4, 3])], [1, 2, 3, 4])
    first = relocate_intra(inst, sol, 0, "first")
    best = relocate_intra(inst, sol, 0, "best")
    assert first.params <= best.params
    assert best.delta <= first.delta
