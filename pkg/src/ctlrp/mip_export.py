"""Exact two-commodity flow model of the problem, LP-file I/O and path cuts.

Nodes of the model graph are the depots ``0..nD-1``, the facilities
``nD..nD+nF-1`` (same ids as in :mod:`ctlrp.core`) and one copy per depot,
``copy(d) = nD + nF + d``, where routes terminate.  For every edge ``{u, v}``
the model has the binary ``xi_u_v`` and the two flows ``x_u_v`` and
``x_v_u``: a vehicle going from ``u`` to ``v`` carries ``x_u_v`` and the
opposite variable holds its residual capacity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .core import Instance, Solution, facility_loads

TOL = 1e-6
SENSES = ("<=", ">=", "=")


class StructuralError(ValueError):
    """The edge selection does not decompose into depot-to-copy paths."""


class LpParseError(ValueError):
    pass


@dataclass
class Row:
    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float

    @property
    def family(self) -> str:
        return self.name.split(".", 1)[0]

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(a * values.get(v, 0.0) for v, a in self.coeffs.items())

    def violation(self, values: Mapping[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class LpModel:
    n_depots: int = 0
    n_facilities: int = 0
    vehicle_capacity: float = 0.0
    variables: list[str] = field(default_factory=list)
    binaries: set[str] = field(default_factory=set)
    objective: dict[str, float] = field(default_factory=dict)
    rows: list[Row] = field(default_factory=list)

    def copy_of(self, d: int) -> int:
        return self.n_depots + self.n_facilities + d

    def depot_of_copy(self, node: int) -> int:
        return node - self.n_depots - self.n_facilities

    def node_kind(self, node: int) -> str:
        if node < self.n_depots:
            return "depot"
        if node < self.n_depots + self.n_facilities:
            return "facility"
        return "copy"

    def edges(self) -> list[tuple[int, int]]:
        return model_edges(self.n_depots, self.n_facilities)

    def add(self, name: str, coeffs: Mapping[str, float], sense: str, rhs: float) -> Row:
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        unknown = [v for v in coeffs if v not in self._index]
        if unknown:
            raise KeyError(f"row {name} uses undeclared variables {unknown[:3]}")
        row = Row(name, {v: float(a) for v, a in coeffs.items() if a != 0}, sense, float(rhs))
        self.rows.append(row)
        return row

    def declare(self, name: str, binary: bool = False, cost: float = 0.0) -> str:
        self.variables.append(name)
        self._index[name] = len(self.variables) - 1
        if binary:
            self.binaries.add(name)
        if cost:
            self.objective[name] = float(cost)
        return name

    def __post_init__(self) -> None:
        self._index = {v: k for k, v in enumerate(self.variables)}

    def families(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.family] = out.get(r.family, 0) + 1
        return out

    def same_as(self, other: LpModel) -> bool:
        def rows(m):
            return [(r.name, r.coeffs, r.sense, r.rhs) for r in m.rows]
        return (self.variables == other.variables and self.binaries == other.binaries
                and self.objective == other.objective and rows(self) == rows(other))


def model_edges(n_depots: int, n_facilities: int) -> list[tuple[int, int]]:
    """Depot-facility edges, facility pairs ``i < j`` and facility-copy edges, in that order."""
    F = range(n_depots, n_depots + n_facilities)
    copies = range(n_depots + n_facilities, 2 * n_depots + n_facilities)
    edges = [(d, j) for d in range(n_depots) for j in F]
    edges += [(i, j) for i in F for j in F if i < j]
    edges += [(j, cd) for cd in copies for j in F]
    return edges


def xi(u: int, v: int) -> str:
    return f"xi_{min(u, v)}_{max(u, v)}"


def flow(u: int, v: int) -> str:
    return f"x_{u}_{v}"


def tau(i: int, l: int) -> str:
    return f"tau_{i}_{l}"


def build_model(inst: Instance, valid_inequalities: bool = True) -> LpModel:
    nD, nF = inst.n_depots, inst.n_facilities
    m = LpModel(nD, nF, float(inst.vehicle_capacity))
    Q = inst.vehicle_capacity
    M = inst.n_vehicles
    c = inst.cost
    D, F = list(inst.depots), list(inst.facilities)
    copies = [m.copy_of(d) for d in D]
    real = {m.copy_of(d): d for d in D}

    def base(node: int) -> int:
        return real.get(node, node)

    edges = m.edges()
    for u, v in edges:
        m.declare(flow(u, v))
        m.declare(flow(v, u))
        m.declare(xi(u, v), binary=True, cost=float(c[base(u), base(v)]))
    for d in D:
        m.declare(f"y_{d}", binary=True, cost=float(inst.depot_cost[d]))
    for i in F:
        m.declare(f"z_{i}", binary=True)
    cov = inst.coverers()
    for i in F:
        for l in cov[i]:
            m.declare(tau(i, l), binary=True)

    incident: dict[int, list[int]] = {n: [] for n in range(2 * nD + nF)}
    for u, v in edges:
        incident[u].append(v)
        incident[v].append(u)
    qW = float(inst.total_demand)
    q = inst.demand

    for i in F:
        coeffs: dict[str, float] = {}
        for j in incident[i]:
            coeffs[flow(j, i)] = coeffs.get(flow(j, i), 0.0) + 1
            coeffs[flow(i, j)] = coeffs.get(flow(i, j), 0.0) - 1
        for l in cov[i]:
            coeffs[tau(i, l)] = -2 * float(q[l])
        m.add(f"facility_flow.{i}", coeffs, "=", 0.0)
    m.add("depot_outflow.all", {flow(d, j): 1 for d in D for j in F}, "=", qW)
    m.add("depot_return.all", {flow(j, d): 1 for d in D for j in F}, "=", M * Q - qW)
    m.add("copy_outflow.all", {flow(cd, j): 1 for cd in copies for j in F}, "=", M * Q)
    for d in D:
        for j in F:
            m.add(f"depot_edge_open.{d}_{j}", {xi(d, j): 1, f"y_{d}": -1}, "<=", 0.0)
    for d in D:
        for j in F:
            m.add(f"copy_edge_open.{j}_{m.copy_of(d)}", {xi(j, m.copy_of(d)): 1, f"y_{d}": -1}, "<=", 0.0)
    for u, v in edges:
        m.add(f"edge_capacity.{min(u, v)}_{max(u, v)}",
              {flow(u, v): 1, flow(v, u): 1, xi(u, v): -Q}, "=", 0.0)
    for i in F:
        coeffs = {xi(i, j): 1 for j in incident[i]}
        coeffs[f"z_{i}"] = -2
        m.add(f"facility_degree.{i}", coeffs, "=", 0.0)
    for l in inst.customers:
        m.add(f"single_cover.{l}", {tau(i, l): 1 for i in sorted(inst.coverage[l])}, "=", 1.0)
    for l in inst.customers:
        for i in sorted(inst.coverage[l]):
            m.add(f"cover_opens.{i}_{l}", {tau(i, l): 1, f"z_{i}": -1}, "<=", 0.0)
    for i in F:
        coeffs = {tau(i, l): -1 for l in cov[i]}
        coeffs[f"z_{i}"] = 1
        m.add(f"open_needs_cover.{i}", coeffs, "<=", 0.0)
    for i in F:
        m.add(f"facility_capacity.{i}", {tau(i, l): float(q[l]) for l in cov[i]}, "<=",
              float(inst.fac_cap(i)))
    for d in D:
        coeffs = {flow(d, j): 1 for j in F}
        coeffs[f"y_{d}"] = -float(inst.depot_capacity[d])
        m.add(f"depot_capacity.{d}", coeffs, "<=", 0.0)
    if valid_inequalities:
        for d in D:
            for j in F:
                m.add(f"copy_empty_arrival.{j}_{m.copy_of(d)}", {flow(j, m.copy_of(d)): 1}, "=", 0.0)
        for d in D:
            coeffs = {xi(d, j): 1 for j in F}
            for j in F:
                coeffs[xi(j, m.copy_of(d))] = -1
            m.add(f"depot_degree_match.{d}", coeffs, "=", 0.0)
        for d in D:
            coeffs: dict[str, float] = {}
            for j in F:
                coeffs[flow(d, j)] = 1
                coeffs[flow(j, d)] = 1
                coeffs[flow(m.copy_of(d), j)] = -1
            m.add(f"depot_flow_match.{d}", coeffs, "=", 0.0)
    return m


def expected_counts(inst: Instance, valid_inequalities: bool = True) -> tuple[int, int]:
    """Closed-form (variables, rows) of :func:`build_model`."""
    D, F, W = inst.n_depots, inst.n_facilities, inst.n_customers
    cover = sum(len(s) for s in inst.coverage)
    E = 2 * D * F + F * (F - 1) // 2
    n_vars = 3 * E + D + F + cover
    n_rows = F + 3 + 2 * D * F + E + F + W + cover + F + F + D
    if valid_inequalities:
        n_rows += D * F + 2 * D
    return n_vars, n_rows


# ---------------------------------------------------------------- solutions

def encode_solution(inst: Instance, sol: Solution, model: LpModel | None = None) -> dict[str, float]:
    """Variable values describing ``sol`` in the flow model (zeros omitted)."""
    nD, nF = inst.n_depots, inst.n_facilities
    Q = float(inst.vehicle_capacity)
    loads = facility_loads(inst, sol.assignment)
    vals: dict[str, float] = {}
    for r in sol.routes:
        if not r.stops:
            raise ValueError("routes without stops cannot be encoded")
        path = [r.depot, *r.stops, nD + nF + r.depot]
        load = sum(loads[f] for f in r.stops)
        for u, v in zip(path, path[1:]):
            vals[xi(u, v)] = 1.0
            vals[flow(u, v)] = load
            vals[flow(v, u)] = Q - load
            if inst.is_facility(v):
                load -= loads[v]
        vals[f"y_{r.depot}"] = 1.0
    for l, f in enumerate(sol.assignment):
        vals[f"z_{f}"] = 1.0
        vals[tau(f, l)] = 1.0
    if model is not None:
        missing = [v for v in vals if v not in model._index]
        if missing:
            raise KeyError(f"encoding uses variables unknown to the model: {missing[:3]}")
    return {k: float(v) for k, v in vals.items() if v != 0}


@dataclass
class RowViolation:
    name: str
    amount: float


def check_solution(model: LpModel, values: Mapping[str, float], tol: float = TOL) -> list[RowViolation]:
    """Rows (and variable domains) violated by ``values`` by more than ``tol``; absent variables are 0."""
    out = []
    for name, v in values.items():
        if name not in model._index:
            out.append(RowViolation(f"unknown.{name}", float("inf")))
        elif v < -tol:
            out.append(RowViolation(f"domain.{name}", -v))
        elif name in model.binaries and (abs(v - round(v)) > tol or v > 1 + tol):
            out.append(RowViolation(f"domain.{name}", abs(v - round(min(v, 1)))))
    for row in model.rows:
        amount = row.violation(values)
        if amount > tol:
            out.append(RowViolation(row.name, amount))
    return out


def objective_value(model: LpModel, values: Mapping[str, float]) -> float:
    return sum(a * values.get(v, 0.0) for v, a in model.objective.items())


# ------------------------------------------------------------------ path cuts

@dataclass(frozen=True)
class PathCut:
    S: frozenset[int]
    i: int
    j: int
    x_prime: frozenset[int]
    x_star: frozenset[int]


def in_partition_family(n_depots: int, n_facilities: int, x_prime: Iterable[int],
                        x_star: Iterable[int]) -> bool:
    """Disjoint depot/copy sets holding exactly one of ``d`` and ``copy(d)`` for every depot."""
    xp, xs = set(x_prime), set(x_star)
    off = n_depots + n_facilities
    nodes = set(range(n_depots)) | set(range(off, off + n_depots))
    union = xp | xs
    if xp & xs or not union <= nodes or len(union) != n_depots:
        return False
    return all(not (d in union and d + off in union) for d in range(n_depots))


def validate_cut(model: LpModel, cut: PathCut) -> None:
    F = set(range(model.n_depots, model.n_depots + model.n_facilities))
    if not cut.S or not cut.S <= F:
        raise ValueError("S must be a nonempty set of facilities")
    if cut.i not in cut.S or cut.j not in cut.S:
        raise ValueError("cut endpoints must lie in S")
    if not in_partition_family(model.n_depots, model.n_facilities, cut.x_prime, cut.x_star):
        raise ValueError("depot sets do not form an admissible partition")


def _endpoint_edges(model: LpModel, node: int, X: Iterable[int]) -> list[str]:
    return [xi(x, node) for x in sorted(X)]


def cut_to_row(model: LpModel, cut: PathCut, name: str | None = None) -> Row:
    """``xi(delta(S)) - 2 xi({i}:X') - 2 xi({j}:X*) >= 0`` over the model's edge variables."""
    validate_cut(model, cut)
    coeffs: dict[str, float] = {}
    for u, v in model.edges():
        if (u in cut.S) != (v in cut.S):
            coeffs[xi(u, v)] = coeffs.get(xi(u, v), 0.0) + 1
    for var in _endpoint_edges(model, cut.i, cut.x_prime):
        coeffs[var] = coeffs.get(var, 0.0) - 2
    for var in _endpoint_edges(model, cut.j, cut.x_star):
        coeffs[var] = coeffs.get(var, 0.0) - 2
    if name is None:
        name = "path_cut." + "_".join(map(str, sorted(cut.S))) + f"_{cut.i}_{cut.j}"
    return Row(name, {k: v for k, v in coeffs.items() if v != 0}, ">=", 0.0)


def cut_sides(model: LpModel, cut: PathCut, values: Mapping[str, float]) -> tuple[float, float]:
    """The two sides ``(xi(delta(S)), 2(xi({i}:X') + xi({j}:X*)))`` at ``values``."""
    lhs = sum(values.get(xi(u, v), 0.0) for u, v in model.edges() if (u in cut.S) != (v in cut.S))
    rhs = 2 * (sum(values.get(e, 0.0) for e in _endpoint_edges(model, cut.i, cut.x_prime))
               + sum(values.get(e, 0.0) for e in _endpoint_edges(model, cut.j, cut.x_star)))
    return lhs, rhs


def decode_routes(model: LpModel, values: Mapping[str, float]) -> list[tuple[int, list[int], int]]:
    """Split the selected edges into ``(depot, facilities, copy)`` paths."""
    adj: dict[int, list[int]] = {}
    for u, v in model.edges():
        val = values.get(xi(u, v), 0.0)
        if abs(val - round(val)) > TOL or round(val) not in (0, 1):
            raise StructuralError(f"{xi(u, v)} = {val} is not binary")
        if round(val) == 1:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
    for node, nb in adj.items():
        if model.node_kind(node) == "facility" and len(nb) != 2:
            raise StructuralError(f"facility {node} has degree {len(nb)}")
    routes = []
    seen: set[int] = set()
    for d in range(model.n_depots):
        for first in sorted(adj.get(d, [])):
            stops, prev, cur = [], d, first
            while model.node_kind(cur) == "facility":
                if cur in seen:
                    raise StructuralError(f"facility {cur} reached twice")
                seen.add(cur)
                stops.append(cur)
                a, b = adj[cur]
                prev, cur = cur, (b if a == prev else a)
            if model.node_kind(cur) != "copy":
                raise StructuralError(f"path from depot {d} ends at depot {cur}, not at a copy")
            routes.append((d, stops, cur))
    stray = {n for n, nb in adj.items() if model.node_kind(n) == "facility"} - seen
    if stray:
        raise StructuralError(f"facilities {sorted(stray)} lie on a cycle detached from the depots")
    return routes


def separate_elementary(model: LpModel, values: Mapping[str, float]) -> list[PathCut]:
    """One cut per route whose end copy belongs to another depot."""
    copies = frozenset(model.copy_of(d) for d in range(model.n_depots))
    cuts = []
    for d, stops, end in decode_routes(model, values):
        if end != model.copy_of(d):
            cuts.append(PathCut(frozenset(stops), stops[0], stops[-1], frozenset({d}),
                                copies - {model.copy_of(d)}))
    return cuts


def lazy_cut_loop(model: LpModel, solve: Callable[[LpModel], Mapping[str, float] | None],
                  max_rounds: int = 100) -> tuple[Mapping[str, float] | None, int]:
    """Solve, add violated elementary cuts, repeat; returns the final point and the number of cuts added."""
    added = 0
    for _ in range(max_rounds):
        values = solve(model)
        if values is None:
            return None, added
        cuts = separate_elementary(model, values)
        if not cuts:
            return values, added
        for cut in cuts:
            model.rows.append(cut_to_row(model, cut, name=f"path_cut.{added}"))
            added += 1
    raise RuntimeError(f"still violated after {max_rounds} rounds")


def to_arrays(model: LpModel):
    """Dense ``(c, A, row_lo, row_hi, integrality)`` suitable for ``scipy.optimize.milp``."""
    idx = model._index
    n = len(model.variables)
    c = np.zeros(n)
    for v, a in model.objective.items():
        c[idx[v]] = a
    A = np.zeros((len(model.rows), n))
    lo = np.full(len(model.rows), -np.inf)
    hi = np.full(len(model.rows), np.inf)
    for k, row in enumerate(model.rows):
        for v, a in row.coeffs.items():
            A[k, idx[v]] = a
        if row.sense in ("<=", "="):
            hi[k] = row.rhs
        if row.sense in (">=", "="):
            lo[k] = row.rhs
    integrality = np.array([1 if v in model.binaries else 0 for v in model.variables])
    return c, A, lo, hi, integrality


# ------------------------------------------------------------------- LP text

def _num(a: float) -> str:
    return str(int(a)) if float(a).is_integer() and abs(a) < 1e15 else repr(float(a))


def _expr(coeffs: Mapping[str, float], width: int = 200) -> list[str]:
    parts = []
    for k, (v, a) in enumerate(coeffs.items()):
        sign = "-" if a < 0 else "+"
        term = f"{_num(abs(a))} {v}"
        parts.append(term if k == 0 and sign == "+" else f"{sign} {term}")
    lines, cur = [], ""
    for p in parts:
        if cur and len(cur) + len(p) + 1 > width:
            lines.append(cur)
            cur = p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def dumps_lp(model: LpModel) -> str:
    out = [f"\\ depots={model.n_depots} facilities={model.n_facilities} Q={_num(model.vehicle_capacity)}",
           "Minimize"]
    obj = _expr(model.objective) if model.objective else ["0"]
    out.append(" obj: " + obj[0])
    out.extend("   " + line for line in obj[1:])
    out.append("Subject To")
    for row in model.rows:
        body = _expr(row.coeffs) if row.coeffs else ["0"]
        body[-1] += f" {row.sense} {_num(row.rhs)}"
        out.append(f" {row.name}: " + body[0])
        out.extend("   " + line for line in body[1:])
    if model.variables:
        out.append("Bounds")
        for v in model.variables:
            out.append(f" 0 <= {v} <= 1" if v in model.binaries else f" {v} >= 0")
    if model.binaries:
        out.append("Binaries")
        out.extend(f" {v}" for v in model.variables if v in model.binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: LpModel, path: str | Path) -> None:
    Path(path).write_text(dumps_lp(model))


_SECTIONS = {"minimize": "obj", "subject to": "rows", "bounds": "bounds",
             "binaries": "bin", "binary": "bin", "end": "end"}
_HEADER = re.compile(r"\\ depots=(\d+) facilities=(\d+) Q=(\S+)")


def _terms(tokens: list[str]) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    sign, num = 1.0, None
    for t in tokens:
        if t in ("+", "-"):
            sign = 1.0 if t == "+" else -1.0
            continue
        try:
            num = float(t)
            continue
        except ValueError:
            pass
        coeffs[t] = coeffs.get(t, 0.0) + sign * (1.0 if num is None else num)
        sign, num = 1.0, None
    if num not in (None, 0.0):
        raise LpParseError("constant terms are not supported")
    return coeffs


def parse_lp(text: str) -> LpModel:
    """Read the subset of the LP format written by :func:`dumps_lp`."""
    head = _HEADER.search(text)
    model = LpModel(*(int(head.group(1)), int(head.group(2)), float(head.group(3)))) if head else LpModel()
    section = None
    buf: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": []}
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            section = key
            continue
        if section is None or section == "end":
            raise LpParseError(f"content outside a section: {raw!r}")
        buf[section].append(line)

    bound_re = re.compile(r"^(?:0\s*<=\s*)?(\S+)\s*(?:<=\s*1|>=\s*0)$")
    for line in buf["bounds"]:
        mt = bound_re.match(line)
        if not mt:
            raise LpParseError(f"unsupported bound {line!r}")
        model.declare(mt.group(1))
    bins = [t for line in buf["bin"] for t in line.split()]
    for v in bins:
        if v not in model._index:
            model.declare(v)
        model.binaries.add(v)

    obj = " ".join(buf["obj"]).split()
    if obj and obj[0].endswith(":"):
        obj = obj[1:]
    model.objective = {v: a for v, a in _terms(obj).items() if a != 0}

    tokens = " ".join(buf["rows"]).split()
    k = 0
    while k < len(tokens):
        if not tokens[k].endswith(":"):
            raise LpParseError(f"unnamed constraint near {tokens[k]!r}")
        name = tokens[k][:-1]
        k += 1
        start = k
        while k < len(tokens) and tokens[k] not in ("<=", ">=", "=", "=<", "=>", "<", ">"):
            k += 1
        if k + 1 >= len(tokens):
            raise LpParseError(f"constraint {name} lacks a right-hand side")
        sense = {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(tokens[k], tokens[k])
        coeffs = _terms(tokens[start:k])
        try:
            rhs = float(tokens[k + 1])
        except ValueError:
            raise LpParseError(f"bad right-hand side in {name}") from None
        for v in coeffs:
            if v not in model._index:
                model.declare(v)
        model.rows.append(Row(name, {v: a for v, a in coeffs.items() if a != 0}, sense, rhs))
        k += 2
    return model


def read_lp(path: str | Path) -> LpModel:
    return parse_lp(Path(path).read_text())
