"""Depth-first branch-and-bound for small 0-1 integer programs.

Node bounds come from the continuous relaxation (HiGHS via ``scipy.optimize.linprog``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

INT_TOL = 1e-6
FEAS_TOL = 1e-7


class MalformedProblemError(ValueError):
    pass


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_BUDGET_HIT = "feasible-budget-hit"
    INFEASIBLE = "infeasible"
    BUDGET_HIT_NO_SOLUTION = "budget-hit-no-solution"


@dataclass
class MilpProblem:
    """Minimize ``objective @ x + offset`` over binary ``x`` subject to ``A x (sense) rhs``."""

    objective: np.ndarray
    A: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    offset: float = 0.0
    names: list[str] | None = None
    warm_start: np.ndarray | None = None
    node_limit: int = 1_000_000
    time_limit: float = 5.0

    @property
    def n(self) -> int:
        return len(self.objective)


@dataclass
class MilpResult:
    status: Status
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int = 0
    incumbents: list[float] = field(default_factory=list)

    def values(self, names: Sequence[str]) -> dict[str, int]:
        assert self.x is not None
        return {n: int(round(v)) for n, v in zip(names, self.x)}


class MilpBuilder:
    """Incremental construction of a :class:`MilpProblem` with named variables."""

    def __init__(self) -> None:
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.costs: list[float] = []
        self.rows: list[tuple[dict[int, float], str, float]] = []
        self.offset = 0.0

    def var(self, name: str, cost: float = 0.0) -> int:
        if name in self.index:
            raise MalformedProblemError(f"duplicate variable {name}")
        self.index[name] = len(self.names)
        self.names.append(name)
        self.costs.append(float(cost))
        return self.index[name]

    def row(self, coeffs: Mapping[int, float], sense: str, rhs: float) -> None:
        if sense not in ("<=", "=", ">="):
            raise MalformedProblemError(f"unknown sense {sense!r}")
        self.rows.append((dict(coeffs), sense, float(rhs)))

    def build(self, warm_start: Mapping[str, int] | None = None, **kw) -> MilpProblem:
        n = len(self.names)
        A = np.zeros((len(self.rows), n))
        for i, (coeffs, _, _) in enumerate(self.rows):
            for j, a in coeffs.items():
                A[i, j] += a
        ws = None
        if warm_start is not None:
            ws = np.zeros(n)
            for name, v in warm_start.items():
                ws[self.index[name]] = v
        return MilpProblem(
            objective=np.asarray(self.costs, dtype=float),
            A=A,
            senses=[s for _, s, _ in self.rows],
            rhs=np.asarray([r for _, _, r in self.rows], dtype=float),
            offset=self.offset,
            names=list(self.names),
            warm_start=ws,
            **kw,
        )


def check_problem(p: MilpProblem) -> None:
    n = p.n
    if p.A.shape != (len(p.senses), n) or p.rhs.shape != (len(p.senses),):
        raise MalformedProblemError("constraint matrix, senses and rhs disagree in shape")
    if not (np.all(np.isfinite(p.objective)) and np.all(np.isfinite(p.A))
            and np.all(np.isfinite(p.rhs)) and math.isfinite(p.offset)):
        raise MalformedProblemError("non-finite coefficient")
    bad = [s for s in p.senses if s not in ("<=", "=", ">=")]
    if bad:
        raise MalformedProblemError(f"unknown senses {bad}")
    used = (p.objective != 0) | np.any(p.A != 0, axis=0) if n else np.zeros(0, bool)
    if n and not np.all(used):
        raise MalformedProblemError(f"variables {np.flatnonzero(~used).tolist()} appear nowhere")
    if p.warm_start is not None and p.warm_start.shape != (n,):
        raise MalformedProblemError("warm start has wrong length")


def is_feasible_point(p: MilpProblem, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
    lhs = p.A @ x if len(p.senses) else np.zeros(0)
    for v, s, r in zip(lhs, p.senses, p.rhs):
        scale = tol * max(1.0, abs(r))
        if s == "<=" and v > r + scale:
            return False
        if s == ">=" and v < r - scale:
            return False
        if s == "=" and abs(v - r) > scale:
            return False
    return True


def _split(p: MilpProblem):
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for i, s in enumerate(p.senses):
        if s == "<=":
            ub_rows.append(p.A[i]); ub_rhs.append(p.rhs[i])
        elif s == ">=":
            ub_rows.append(-p.A[i]); ub_rhs.append(-p.rhs[i])
        else:
            eq_rows.append(p.A[i]); eq_rhs.append(p.rhs[i])
    A_ub = np.array(ub_rows) if ub_rows else None
    A_eq = np.array(eq_rows) if eq_rows else None
    return A_ub, (np.array(ub_rhs) if ub_rows else None), A_eq, (np.array(eq_rhs) if eq_rows else None)


def solve(p: MilpProblem) -> MilpResult:
    """Exact minimum of ``p`` when the node and time budgets allow it."""
    check_problem(p)
    n = p.n
    start = time.monotonic()
    A_ub, b_ub, A_eq, b_eq = _split(p)

    best_x: np.ndarray | None = None
    best = math.inf
    history: list[float] = []
    if p.warm_start is not None:
        ws = np.round(p.warm_start)
        if np.all((ws == 0) | (ws == 1)) and is_feasible_point(p, ws):
            best_x, best = ws, float(p.objective @ ws)
            history.append(best + p.offset)

    if n == 0:
        x = np.zeros(0)
        if is_feasible_point(p, x):
            return MilpResult(Status.OPTIMAL, x, p.offset, p.offset, 1, [p.offset])
        return MilpResult(Status.INFEASIBLE, None, math.inf, math.inf, 1)

    def prunable(bound: float) -> bool:
        return bound >= best - 1e-9 * max(1.0, abs(best))

    A_pos, A_neg = np.clip(p.A, 0, None), np.clip(p.A, None, 0)
    c_pos, c_neg = np.clip(p.objective, 0, None), np.clip(p.objective, None, 0)
    is_le = np.array([s != ">=" for s in p.senses], dtype=bool)
    is_ge = np.array([s != "<=" for s in p.senses], dtype=bool)
    row_tol = FEAS_TOL * np.maximum(1.0, np.abs(p.rhs))

    def hopeless(lo: np.ndarray, hi: np.ndarray) -> bool:
        # activity bounds over the box: cheap infeasibility and bound test before any LP
        if prunable(float(c_pos @ lo + c_neg @ hi)):
            return True
        if p.A.shape[0] == 0:
            return False
        least = A_pos @ lo + A_neg @ hi
        most = A_pos @ hi + A_neg @ lo
        return bool(np.any(is_le & (least > p.rhs + row_tol)) or np.any(is_ge & (most < p.rhs - row_tol)))

    # stack entries: (lower bounds, upper bounds, parent bound)
    stack: list[tuple[np.ndarray, np.ndarray, float]] = [(np.zeros(n), np.ones(n), -math.inf)]
    nodes = 0
    budget_hit = False
    while stack:
        if nodes >= p.node_limit or time.monotonic() - start > p.time_limit:
            budget_hit = True
            break
        lo, hi, parent_bound = stack.pop()
        if prunable(parent_bound) or hopeless(lo, hi):
            continue
        nodes += 1
        if np.all(lo == hi):
            x = lo.copy()
            if is_feasible_point(p, x):
                val = float(p.objective @ x)
                if val < best - 1e-12:
                    best, best_x = val, x
                    history.append(best + p.offset)
            continue
        res = linprog(p.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=np.column_stack([lo, hi]), method="highs")
        if res.status == 2:
            continue
        if res.status == 0:
            bound = float(res.fun)
            if prunable(bound):
                continue
            xr = res.x
            frac = np.abs(xr - np.round(xr))
            free = lo != hi
            if np.all(frac[free] <= INT_TOL):
                x = np.round(xr)
                if is_feasible_point(p, x):
                    val = float(p.objective @ x)
                    if val < best - 1e-12:
                        best, best_x = val, x
                        history.append(best + p.offset)
                    continue
                j = int(np.flatnonzero(free)[0])
                up_first = False
            else:
                masked = np.where(free, frac, -1.0)
                j = int(np.argmax(masked))  # most fractional, lowest index on ties
                up_first = xr[j] >= 0.5
        else:
            # numerical trouble: no bound, branch on the first free variable
            bound = parent_bound
            j = int(np.flatnonzero(lo != hi)[0])
            up_first = False
        down_lo, down_hi = lo.copy(), hi.copy()
        down_hi[j] = 0.0
        up_lo, up_hi = lo.copy(), hi.copy()
        up_lo[j] = 1.0
        children = [(down_lo, down_hi, bound), (up_lo, up_hi, bound)]
        if up_first:
            children.reverse()
        stack.append(children[1])
        stack.append(children[0])

    if budget_hit:
        open_bound = min((b for _, _, b in stack), default=math.inf)
        bound = min(best, open_bound) + p.offset
        if best_x is None:
            return MilpResult(Status.BUDGET_HIT_NO_SOLUTION, None, math.inf, bound, nodes, history)
        return MilpResult(Status.FEASIBLE_BUDGET_HIT, best_x, best + p.offset, bound, nodes, history)
    if best_x is None:
        return MilpResult(Status.INFEASIBLE, None, math.inf, math.inf, nodes, history)
    return MilpResult(Status.OPTIMAL, best_x, best + p.offset, best + p.offset, nodes, history)

