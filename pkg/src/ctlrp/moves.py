"""Move records and load bookkeeping shared by the route operators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Literal

from .core import EPS, Instance, Solution, facility_loads

Accept = Literal["first", "best"]


@dataclass(frozen=True)
class MoveDelta:
    op: str
    routes: tuple[int, ...]
    params: tuple
    delta: float  # change of total cost; negative improves
    new_stops: tuple[tuple[int, ...], ...]  # replacement stop lists, aligned with ``routes``


class Loads:
    """Facility, route and depot demand of a solution, computed once per scan."""

    def __init__(self, inst: Instance, sol: Solution) -> None:
        self.fac = facility_loads(inst, sol.assignment)
        self.route = [sum(self.fac[f] for f in r.stops) for r in sol.routes]
        self.depot = {d: 0.0 for d in inst.depots}
        for r, load in zip(sol.routes, self.route):
            self.depot[r.depot] += load


def apply_move(sol: Solution, move: MoveDelta) -> Solution:
    out = sol.copy()
    for k, stops in zip(move.routes, move.new_stops):
        out.routes[k].stops = list(stops)
    return out


def select(candidates: Iterable[tuple[float, tuple]], accept: Accept) -> tuple[float, tuple] | None:
    """First strictly improving candidate, or the minimum (first on ties) for ``best``."""
    best: tuple[float, tuple] | None = None
    for delta, params in candidates:
        if delta < -EPS:
            if accept == "first":
                return delta, params
            if best is None or delta < best[0]:
                best = (delta, params)
    return best


def pick(moves: Iterator[MoveDelta | None], apply: Accept) -> MoveDelta | None:
    """Combine per-route (or per-pair) results under the apply strategy."""
    best: MoveDelta | None = None
    for mv in moves:
        if mv is None:
            continue
        if apply == "first":
            return mv
        if best is None or mv.delta < best.delta:
            best = mv
    return best
