"""Intra-route operators: 2opt, Swap and Relocate.

Each operator scans positions lexicographically and returns an improving
:class:`MoveDelta` for one route, or ``None``.
"""

from __future__ import annotations

from .core import Instance, Solution
from .moves import Accept, MoveDelta, pick, select


def two_opt(inst: Instance, sol: Solution, k: int, accept: Accept = "best") -> MoveDelta | None:
    r = sol.routes[k]
    n = len(r.stops)
    if n < 3:
        return None
    p = r.path()
    c = inst.c

    def candidates():
        for i in range(n):
            a, b = p[i], p[i + 1]
            cab = c[a][b]
            for j in range(i + 2, n + 1):
                cc, d = p[j], p[j + 1]
                yield c[a][cc] + c[b][d] - cab - c[cc][d], (i, j)

    hit = select(candidates(), accept)
    if hit is None:
        return None
    delta, (i, j) = hit
    stops = p[1:i + 1] + p[i + 1:j + 1][::-1] + p[j + 1:-1]
    return MoveDelta("2opt", (k,), (i, j), delta, (tuple(stops),))


def _swap_delta(c, p: list[int], i: int, j: int) -> float:
    # i < j are path indices of the two stops
    a, x, b = p[i - 1], p[i], p[i + 1]
    e, y, g = p[j - 1], p[j], p[j + 1]
    if j == i + 1:
        return c[a][y] + c[x][g] - c[a][x] - c[y][g]
    return (c[a][y] + c[y][b] + c[e][x] + c[x][g]) - (c[a][x] + c[x][b] + c[e][y] + c[y][g])


def swap_intra(inst: Instance, sol: Solution, k: int, accept: Accept = "best") -> MoveDelta | None:
    r = sol.routes[k]
    n = len(r.stops)
    if n < 2:
        return None
    p = r.path()
    c = inst.c
    cands = ((_swap_delta(c, p, i + 1, j + 1), (i, j)) for i in range(n) for j in range(i + 1, n))
    hit = select(cands, accept)
    if hit is None:
        return None
    delta, (i, j) = hit
    stops = list(r.stops)
    stops[i], stops[j] = stops[j], stops[i]
    return MoveDelta("swap", (k,), (i, j), delta, (tuple(stops),))


def relocate_intra(inst: Instance, sol: Solution, k: int, accept: Accept = "best") -> MoveDelta | None:
    """Move one stop to another position; ``(i, j)`` means remove at i, reinsert at j of the shortened list."""
    r = sol.routes[k]
    n = len(r.stops)
    if n < 2:
        return None
    c = inst.c
    p = r.path()

    def candidates():
        for i in range(n):
            x = p[i + 1]
            prev, nxt = p[i], p[i + 2]
            removal = c[prev][nxt] - c[prev][x] - c[x][nxt]
            q = p[:i + 1] + p[i + 2:]
            for j in range(n):
                if j == i:
                    continue
                u, v = q[j], q[j + 1]
                yield removal + c[u][x] + c[x][v] - c[u][v], (i, j)

    hit = select(candidates(), accept)
    if hit is None:
        return None
    delta, (i, j) = hit
    stops = list(r.stops)
    x = stops.pop(i)
    stops.insert(j, x)
    return MoveDelta("relocate", (k,), (i, j), delta, (tuple(stops),))


INTRA_OPERATORS = {
    "2opt": two_opt,
    "swap": swap_intra,
    "relocate": relocate_intra,
}


def find_intra(inst: Instance, sol: Solution, op: str, accept: Accept = "best",
               apply: Accept = "first") -> MoveDelta | None:
    fn = INTRA_OPERATORS[op]
    return pick((fn(inst, sol, k, accept) for k in range(len(sol.routes))), apply)
