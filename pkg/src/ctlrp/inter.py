"""Inter-route operators: 1point, 2point, 2opt* and CrossString.

All moves keep vehicle and depot capacities and never leave a route without
stops (the solution must keep exactly M meaningful routes).
"""

from __future__ import annotations

from itertools import combinations, permutations

from .core import EPS, Instance, Solution
from .moves import Accept, Loads, MoveDelta, pick, select

STRING_LENGTHS = (1, 2, 3)


def _depot_ok(inst: Instance, loads: Loads, d: int, gain: float) -> bool:
    return loads.depot[d] + gain <= inst.depot_capacity[d] + EPS


def one_point(inst: Instance, sol: Solution, k1: int, k2: int, accept: Accept = "best",
              loads: Loads | None = None) -> MoveDelta | None:
    """Move a single facility from route ``k1`` into route ``k2``."""
    r1, r2 = sol.routes[k1], sol.routes[k2]
    if k1 == k2 or len(r1.stops) < 2:
        return None
    loads = loads or Loads(inst, sol)
    c = inst.c
    Q = inst.vehicle_capacity
    p1, p2 = r1.path(), r2.path()

    def candidates():
        for i in range(len(r1.stops)):
            x = p1[i + 1]
            w = loads.fac[x]
            if loads.route[k2] + w > Q + EPS:
                continue
            if r1.depot != r2.depot and not _depot_ok(inst, loads, r2.depot, w):
                continue
            prev, nxt = p1[i], p1[i + 2]
            removal = c[prev][nxt] - c[prev][x] - c[x][nxt]
            for j in range(len(r2.stops) + 1):
                u, v = p2[j], p2[j + 1]
                yield removal + c[u][x] + c[x][v] - c[u][v], (i, j)

    hit = select(candidates(), accept)
    if hit is None:
        return None
    delta, (i, j) = hit
    s1, s2 = list(r1.stops), list(r2.stops)
    x = s1.pop(i)
    s2.insert(j, x)
    return MoveDelta("1point", (k1, k2), (i, j), delta, (tuple(s1), tuple(s2)))


def two_point(inst: Instance, sol: Solution, k1: int, k2: int, accept: Accept = "best",
              loads: Loads | None = None) -> MoveDelta | None:
    """Exchange one facility of ``k1`` with one of ``k2``, each taking the other's position."""
    r1, r2 = sol.routes[k1], sol.routes[k2]
    if k1 == k2 or not r1.stops or not r2.stops:
        return None
    loads = loads or Loads(inst, sol)
    c = inst.c
    Q = inst.vehicle_capacity
    p1, p2 = r1.path(), r2.path()
    cross_depot = r1.depot != r2.depot

    def candidates():
        for i in range(len(r1.stops)):
            a, x, b = p1[i], p1[i + 1], p1[i + 2]
            wx = loads.fac[x]
            out1 = c[a][x] + c[x][b]
            for j in range(len(r2.stops)):
                e, y, g = p2[j], p2[j + 1], p2[j + 2]
                wy = loads.fac[y]
                if loads.route[k1] - wx + wy > Q + EPS or loads.route[k2] - wy + wx > Q + EPS:
                    continue
                if cross_depot and not (_depot_ok(inst, loads, r1.depot, wy - wx)
                                        and _depot_ok(inst, loads, r2.depot, wx - wy)):
                    continue
                delta = (c[a][y] + c[y][b] - out1) + (c[e][x] + c[x][g] - c[e][y] - c[y][g])
                yield delta, (i, j)

    hit = select(candidates(), accept)
    if hit is None:
        return None
    delta, (i, j) = hit
    s1, s2 = list(r1.stops), list(r2.stops)
    s1[i], s2[j] = s2[j], s1[i]
    return MoveDelta("2point", (k1, k2), (i, j), delta, (tuple(s1), tuple(s2)))


def _two_opt_star_options(inst: Instance, sol: Solution, k1: int, k2: int, loads: Loads):
    """Yield ``(delta, (i, j, variant))`` for every feasible reconnection of two depot-sharing routes.

    Edge ``i`` of route 1 is ``(p1[i], p1[i+1])``.  Variant 0 joins head1 with
    reversed head2 and reversed tail1 with tail2; variant 1 swaps the tails.
    """
    r1, r2 = sol.routes[k1], sol.routes[k2]
    c = inst.c
    Q = inst.vehicle_capacity
    p1, p2 = r1.path(), r2.path()
    n1, n2 = len(r1.stops), len(r2.stops)
    head1 = [0.0]
    for f in r1.stops:
        head1.append(head1[-1] + loads.fac[f])
    head2 = [0.0]
    for f in r2.stops:
        head2.append(head2[-1] + loads.fac[f])
    L1, L2 = head1[-1], head2[-1]
    for i in range(n1 + 1):
        a, b = p1[i], p1[i + 1]
        for j in range(n2 + 1):
            cc, d = p2[j], p2[j + 1]
            base = c[a][b] + c[cc][d]
            h1, h2 = head1[i], head2[j]
            t1, t2 = L1 - h1, L2 - h2
            best = None
            # variant 0: (a, c), (b, d)
            if i + j > 0 and (n1 - i) + (n2 - j) > 0 and h1 + h2 <= Q + EPS and t1 + t2 <= Q + EPS:
                best = (c[a][cc] + c[b][d] - base, (i, j, 0))
            # variant 1: (a, d), (b, c)
            if i + (n2 - j) > 0 and j + (n1 - i) > 0 and h1 + t2 <= Q + EPS and h2 + t1 <= Q + EPS:
                cand = (c[a][d] + c[b][cc] - base, (i, j, 1))
                if best is None or cand[0] < best[0]:
                    best = cand
            if best is not None:
                yield best


def two_opt_star(inst: Instance, sol: Solution, k1: int, k2: int, accept: Accept = "best",
                 loads: Loads | None = None) -> MoveDelta | None:
    r1, r2 = sol.routes[k1], sol.routes[k2]
    if k1 == k2 or r1.depot != r2.depot:
        return None
    loads = loads or Loads(inst, sol)
    hit = select(_two_opt_star_options(inst, sol, k1, k2, loads), accept)
    if hit is None:
        return None
    delta, (i, j, variant) = hit
    s1, s2 = r1.stops, r2.stops
    if variant == 0:
        n1 = s1[:i] + s2[:j][::-1]
        n2 = s1[i:][::-1] + s2[j:]
    else:
        n1 = s1[:i] + s2[j:]
        n2 = s2[:j] + s1[i:]
    return MoveDelta("2opt*", (k1, k2), (i, j, variant), delta, (tuple(n1), tuple(n2)))


def _cross_options(inst: Instance, sol: Solution, k1: int, k2: int, loads: Loads,
                   lengths: tuple[int, ...]):
    r1, r2 = sol.routes[k1], sol.routes[k2]
    c = inst.c
    Q = inst.vehicle_capacity
    p1, p2 = r1.path(), r2.path()
    n1, n2 = len(r1.stops), len(r2.stops)
    cross_depot = r1.depot != r2.depot
    for l1 in lengths:
        for l2 in lengths:
            for i in range(n1 - l1 + 1):
                a, A, B, b = p1[i], p1[i + 1], p1[i + l1], p1[i + l1 + 1]
                w1 = sum(loads.fac[f] for f in p1[i + 1:i + l1 + 1])
                for j in range(n2 - l2 + 1):
                    cc, C, D, d = p2[j], p2[j + 1], p2[j + l2], p2[j + l2 + 1]
                    w2 = sum(loads.fac[f] for f in p2[j + 1:j + l2 + 1])
                    if loads.route[k1] - w1 + w2 > Q + EPS or loads.route[k2] - w2 + w1 > Q + EPS:
                        continue
                    if cross_depot and not (_depot_ok(inst, loads, r1.depot, w2 - w1)
                                            and _depot_ok(inst, loads, r2.depot, w1 - w2)):
                        continue
                    base = c[a][A] + c[B][b] + c[cc][C] + c[D][d]
                    s2_fwd = c[a][C] + c[D][b]
                    s2_rev = c[a][D] + c[C][b]
                    s1_fwd = c[cc][A] + c[B][d]
                    s1_rev = c[cc][B] + c[A][d]
                    # scenarios in the listed order: (fwd, fwd), (rev2, fwd1), (fwd2, rev1), (rev2, rev1)
                    scen = [s2_fwd + s1_fwd, s2_rev + s1_fwd, s2_fwd + s1_rev, s2_rev + s1_rev]
                    s = min(range(4), key=lambda t: (scen[t], t))
                    yield scen[s] - base, (i, l1, j, l2, s)


def cross_string(inst: Instance, sol: Solution, k1: int, k2: int,
                 lengths: tuple[int, ...] = STRING_LENGTHS, accept: Accept = "best",
                 loads: Loads | None = None) -> MoveDelta | None:
    """Exchange string ``S1`` of ``k1`` with string ``S2`` of ``k2``, trying both orientations of each."""
    if k1 == k2:
        return None
    loads = loads or Loads(inst, sol)
    hit = select(_cross_options(inst, sol, k1, k2, loads, lengths), accept)
    if hit is None:
        return None
    delta, (i, l1, j, l2, s) = hit
    s1, s2 = sol.routes[k1].stops, sol.routes[k2].stops
    S1, S2 = s1[i:i + l1], s2[j:j + l2]
    ins2 = S2[::-1] if s in (1, 3) else S2
    ins1 = S1[::-1] if s in (2, 3) else S1
    n1 = s1[:i] + ins2 + s1[i + l1:]
    n2 = s2[:j] + ins1 + s2[j + l2:]
    return MoveDelta("crossstring", (k1, k2), (i, l1, j, l2, s), delta, (tuple(n1), tuple(n2)))


def _pairs(n: int, ordered: bool):
    return permutations(range(n), 2) if ordered else combinations(range(n), 2)


def find_inter(inst: Instance, sol: Solution, op: str, accept: Accept = "best",
               apply: Accept = "first") -> MoveDelta | None:
    loads = Loads(inst, sol)
    if op == "1point":
        gen = (one_point(inst, sol, a, b, accept, loads) for a, b in _pairs(len(sol.routes), True))
    elif op == "2point":
        gen = (two_point(inst, sol, a, b, accept, loads) for a, b in _pairs(len(sol.routes), False))
    elif op == "2opt*":
        gen = (two_opt_star(inst, sol, a, b, accept, loads) for a, b in _pairs(len(sol.routes), False))
    elif op == "crossstring":
        gen = (cross_string(inst, sol, a, b, STRING_LENGTHS, accept, loads)
               for a, b in _pairs(len(sol.routes), False))
    else:
        raise KeyError(op)
    return pick(gen, apply)


INTER_OPERATORS = ("1point", "2point", "2opt*", "crossstring")
