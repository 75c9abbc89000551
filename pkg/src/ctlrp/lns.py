"""Layered operator schedule driving the large neighborhood search."""

from __future__ import annotations

import json
import logging
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .construction import ConstructionError, construct
from .core import EPS, Instance, Solution, evaluate
from .customer import (
    closed_facility_shift,
    customer_ip_procedure,
    facility_neighbors,
    greedy_string_replacement_fixpoint,
    open_facility_shift,
)
from .depot import reassign_depots
from .inter import INTER_OPERATORS, find_inter
from .intra import INTRA_OPERATORS, find_intra
from .moves import apply_move

log = logging.getLogger(__name__)

# canonical operator tags, accepted case-insensitively
OPERATOR_ALIASES = {
    "2opt": "2opt",
    "swap": "swap",
    "relocate": "relocate",
    "2opt*": "2opt*",
    "1point": "1point",
    "2point": "2point",
    "crossstring": "crossstring",
    "depotassignment": "depot",
    "depot": "depot",
    "greedystringreplacement_5": "gsr5",
    "greedystringreplacement_3": "gsr3",
    "greedystringreplacement_1": "gsr1",
    "openfacilityshift": "openshift",
    "closedfacilityshift": "closedshift",
    "customerip": "customerip",
}


def resolve_operator(tag: str) -> str:
    key = tag.strip().lower()
    if key in OPERATOR_ALIASES:
        return OPERATOR_ALIASES[key]
    if key.startswith("gsr") and key[3:].isdigit() and int(key[3:]) > 0:
        return key
    if key.startswith("greedystringreplacement_") and key.split("_")[1].isdigit():
        return f"gsr{int(key.split('_')[1])}"
    if key in OPERATOR_ALIASES.values():
        return key
    raise ValueError(f"unknown operator {tag!r}")


_ROUTE_LAYERS = [["2opt", "Swap", "Relocate"], ["2opt*", "1point", "CrossString", "2point"]]
_SHARED = _ROUTE_LAYERS + [
    ["DepotAssignment"],
    ["GreedyStringReplacement_5"],
    ["GreedyStringReplacement_3"],
    ["GreedyStringReplacement_1"],
    ["OpenFacilityShift", "ClosedFacilityShift"],
]
PRESETS: dict[str, list[list[str]]] = {
    "O1": [list(layer) for layer in _SHARED],
    "O2": [list(layer) for layer in _SHARED] + [["CustomerIP"]],
}


@dataclass
class StrategyConfig:
    layers: list[list[str]]
    accept: Literal["first", "best"] = "best"
    apply: Literal["first", "best"] = "first"
    iterate: Literal["once", "repeated"] = "once"
    time_limit: float | None = 120.0
    restarts: int = 1
    customer_ip_threshold: int | None = None
    ip_time_limit: float = 5.0

    def __post_init__(self) -> None:
        if not self.layers or any(not layer for layer in self.layers):
            raise ValueError("operator layers must be nonempty")
        self.layers = [[resolve_operator(o) for o in layer] for layer in self.layers]
        if self.accept not in ("first", "best") or self.apply not in ("first", "best"):
            raise ValueError("accept/apply must be 'first' or 'best'")
        if self.iterate not in ("once", "repeated"):
            raise ValueError("iterate must be 'once' or 'repeated'")
        if self.restarts < 1:
            raise ValueError("at least one run required")

    @classmethod
    def preset(cls, name: str, **kw) -> StrategyConfig:
        return cls(layers=[list(layer) for layer in PRESETS[name.upper()]], **kw)

    @classmethod
    def from_file(cls, path: str | Path) -> StrategyConfig:
        data = json.loads(Path(path).read_text())
        if "preset" in data:
            name = data.pop("preset")
            return cls.preset(name, **data)
        return cls(**data)


@dataclass
class RunResult:
    seed: int
    cost: float | None
    solution: Solution | None
    wall_time: float
    iterations: int = 0
    accepted: Counter = field(default_factory=Counter)
    trajectory: list[tuple[str, float]] = field(default_factory=list)
    error: str | None = None


@dataclass
class RunReport:
    run_costs: list[float | None]
    runs: int
    h_min: float | None
    wall_time: float
    operator_stats: dict[str, int]
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class Context:
    """Per-run state reused by operators (precomputed facility neighbors)."""

    def __init__(self, inst: Instance, cfg: StrategyConfig) -> None:
        self.inst = inst
        self.cfg = cfg
        self.FN = facility_neighbors(inst)


def apply_operator(ctx: Context, sol: Solution, op: str, accept: str = "best",
                   apply: str = "first") -> tuple[Solution, bool]:
    """Run one operator; return the (possibly new) solution and whether it was locally optimal."""
    inst = ctx.inst
    op = resolve_operator(op)
    if op in INTRA_OPERATORS or op in INTER_OPERATORS:
        finder = find_intra if op in INTRA_OPERATORS else find_inter
        move = finder(inst, sol, op, accept, apply)
        if move is None:
            return sol, True
        return apply_move(sol, move), False

    before = evaluate(inst, sol).total
    if op == "depot":
        new = reassign_depots(inst, sol, time_limit=ctx.cfg.ip_time_limit).solution
    elif op.startswith("gsr"):
        new = greedy_string_replacement_fixpoint(inst, sol, int(op[3:]))
    elif op == "openshift":
        new = open_facility_shift(inst, sol, ctx.FN)
    elif op == "closedshift":
        new = closed_facility_shift(inst, sol, ctx.FN)
    elif op == "customerip":
        new = customer_ip_procedure(inst, sol, ctx.cfg.customer_ip_threshold,
                                    time_limit=ctx.cfg.ip_time_limit)
    else:  # pragma: no cover - resolve_operator rejects unknown tags
        raise ValueError(op)
    after = evaluate(inst, new).total
    if after < before - EPS * max(1.0, abs(before)):
        return new, False
    return sol, True


def lns(inst: Instance, cfg: StrategyConfig, initial: Solution,
        on_accept: Callable[[str, Solution, float], None] | None = None) -> RunResult:
    """Improve ``initial`` layer by layer until every operator is locally optimal or time runs out."""
    start = time.monotonic()
    ctx = Context(inst, cfg)
    layers = cfg.layers
    sol = initial
    cost = evaluate(inst, sol).total
    result = RunResult(seed=-1, cost=cost, solution=sol, wall_time=0.0)
    result.trajectory.append(("init", cost))
    optimal = [[False] * len(layer) for layer in layers]
    active = [0] * len(layers)
    level = 0
    while True:
        if cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit:
            break
        idx = active[level]
        op = layers[level][idx]
        new, local_opt = apply_operator(ctx, sol, op, cfg.accept, cfg.apply)
        result.iterations += 1
        if local_opt:
            optimal[level][idx] = True
        else:
            new_cost = evaluate(inst, new).total
            if not new_cost < cost - EPS * max(1.0, abs(cost)):  # pragma: no cover - guarded by operators
                raise AssertionError(f"operator {op} did not decrease the cost")
            sol, cost = new, new_cost
            result.accepted[op] += 1
            result.trajectory.append((op, cost))
            if on_accept is not None:
                on_accept(op, sol, cost)
            for flags in optimal:
                flags[:] = [False] * len(flags)
        if local_opt or cfg.iterate == "once":
            active[level] = (idx + 1) % len(layers[level])
        pending = [k for k, flags in enumerate(optimal) if not all(flags)]
        if not pending:
            break
        level = pending[0]
    result.solution, result.cost = sol, cost
    result.wall_time = time.monotonic() - start
    return result


def single_run(inst: Instance, cfg: StrategyConfig, seed: int,
               on_accept: Callable[[str, Solution, float], None] | None = None) -> RunResult:
    start = time.monotonic()
    rng = np.random.default_rng(seed)
    try:
        initial = construct(inst, rng)
    except ConstructionError as exc:
        return RunResult(seed, None, None, time.monotonic() - start, error=str(exc))
    res = lns(inst, cfg, initial, on_accept)
    res.seed = seed
    res.wall_time = time.monotonic() - start
    return res


def run_seeds(seed: int, runs: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(runs)]


def _single_run_args(args):
    return single_run(*args)


def run_lns(inst: Instance, cfg: StrategyConfig, seed: int = 0,
            workers: int = 1) -> tuple[Solution | None, RunReport, list[RunResult]]:
    """``cfg.restarts`` independent runs; returns the best solution and an aggregate report."""
    start = time.monotonic()
    seeds = run_seeds(seed, cfg.restarts)
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_single_run_args, [(inst, cfg, s) for s in seeds]))
    else:
        results = [single_run(inst, cfg, s) for s in seeds]
    ok = [r for r in results if r.cost is not None]
    best = min(ok, key=lambda r: r.cost) if ok else None
    stats: Counter = Counter()
    for r in results:
        stats.update(r.accepted)
    report = RunReport(
        run_costs=[r.cost for r in results],
        runs=len(results),
        h_min=None if best is None else best.cost,
        wall_time=time.monotonic() - start,
        operator_stats=dict(sorted(stats.items())),
        errors=[f"run {i}: {r.error}" for i, r in enumerate(results) if r.error],
    )
    return (None if best is None else best.solution), report, results


def report_gap(heuristic_cost: float, reference_cost: float) -> float:
    """Percentage gap ``100 * (|h / ref| - 1)``; pass a lower bound as reference for the LB variant."""
    if reference_cost == 0:
        raise ZeroDivisionError("reference cost must be nonzero")
    return 100.0 * (abs(heuristic_cost / reference_cost) - 1.0)
