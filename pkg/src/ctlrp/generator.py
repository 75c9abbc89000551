"""Derive covering scenarios from classical location-routing benchmark files.

A source instance provides facilities (with demands), depots and a vehicle
capacity.  Customers are scattered over the facility bounding box, given
random demands and covered by every facility within a radius proportional to
the box diagonal.  Fleet size and vehicle capacity are then derived from the
total demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Instance, make_instance

MAX_CUSTOMERS = 400
RADIUS_FACTORS = (0.10, 0.15)
MAX_RESAMPLES = 10**6


class InstanceDiscarded(Exception):
    """The derived scenario fails the depot screening rule."""


class GenerationError(RuntimeError):
    pass


class LrpParseError(ValueError):
    def __init__(self, path: str, position: int, message: str) -> None:
        super().__init__(f"{path}: token {position}: {message}")
        self.path = path
        self.position = position
        self.message = message


@dataclass
class LrpSource:
    facility_xy: np.ndarray  # (n, 2)
    facility_demand: np.ndarray  # q_{F,i}
    depot_xy: np.ndarray
    depot_cost: np.ndarray
    depot_capacity: np.ndarray
    vehicle_capacity: float
    cost_type: str = "euclidean"
    name: str = ""

    def __post_init__(self) -> None:
        self.facility_xy = np.asarray(self.facility_xy, dtype=float).reshape(-1, 2)
        self.depot_xy = np.asarray(self.depot_xy, dtype=float).reshape(-1, 2)
        self.facility_demand = np.asarray(self.facility_demand, dtype=float)
        self.depot_cost = np.asarray(self.depot_cost, dtype=float)
        self.depot_capacity = np.asarray(self.depot_capacity, dtype=float)
        if self.cost_type != "euclidean":
            raise ValueError(f"only euclidean costs are supported, got {self.cost_type!r}")
        if len(self.facility_demand) != len(self.facility_xy) or len(self.facility_xy) == 0:
            raise ValueError("need one demand per facility and at least one facility")
        if not len(self.depot_cost) == len(self.depot_capacity) == len(self.depot_xy) > 0:
            raise ValueError("depot arrays disagree in length")
        if not self.vehicle_capacity > 0:
            raise ValueError("vehicle capacity must be positive")

    @property
    def n_facilities(self) -> int:
        return len(self.facility_xy)


@dataclass
class GeneratorConfig:
    multiplier: int = 2
    alpha_index: int = 1
    seed: int = 0
    max_customers: int = MAX_CUSTOMERS
    radius_factors: tuple[float, float] = RADIUS_FACTORS
    capacity_noise: tuple[float, float] = (0.95, 1.0)
    fleet_slack: float = 1.2
    n_customers: int | None = None  # overrides multiplier when set

    def __post_init__(self) -> None:
        if self.alpha_index not in (1, 2):
            raise ValueError("alpha index must be 1 or 2")
        if self.n_customers is None and self.multiplier < 1:
            raise ValueError("multiplier must be positive")

    def customer_count(self, n_facilities: int) -> int:
        n = self.n_customers if self.n_customers is not None else self.multiplier * n_facilities
        return min(n, self.max_customers)


def _tokens(text: str) -> list[str]:
    return text.split()


def parse_lrp(text: str, path: str = "<string>") -> LrpSource:
    """Parse the whitespace-separated layout used by the Prins/Prodhon style files.

    Order: #facilities, #depots, depot coordinates, facility coordinates,
    vehicle capacity, depot capacities, facility demands, depot opening
    costs, route opening cost, cost-type flag.
    """
    toks = _tokens(text)
    pos = 0

    def take(kind, what: str):
        nonlocal pos
        if pos >= len(toks):
            raise LrpParseError(path, pos, f"unexpected end of file while reading {what}")
        tok = toks[pos]
        try:
            val = kind(float(tok)) if kind is int else kind(tok)
        except ValueError:
            raise LrpParseError(path, pos, f"expected number for {what}, got {tok!r}") from None
        if kind is int and float(tok) != val:
            raise LrpParseError(path, pos, f"expected integer for {what}, got {tok!r}")
        pos += 1
        return val

    n_fac = take(int, "facility count")
    n_dep = take(int, "depot count")
    if n_fac < 1 or n_dep < 1:
        raise LrpParseError(path, 0, "facility and depot counts must be positive")
    depot_xy = [(take(float, "depot x"), take(float, "depot y")) for _ in range(n_dep)]
    facility_xy = [(take(float, "facility x"), take(float, "facility y")) for _ in range(n_fac)]
    Q = take(float, "vehicle capacity")
    depot_cap = [take(float, "depot capacity") for _ in range(n_dep)]
    demand = [take(float, "facility demand") for _ in range(n_fac)]
    depot_cost = [take(float, "depot cost") for _ in range(n_dep)]
    if pos < len(toks):
        take(float, "route cost")  # not part of the covering model
    if pos < len(toks):
        flag = take(int, "cost type")
        if flag not in (0, 1):
            raise LrpParseError(path, pos - 1, f"unknown cost type {flag}")
    if pos != len(toks):
        raise LrpParseError(path, pos, f"{len(toks) - pos} trailing tokens")
    try:
        return LrpSource(np.array(facility_xy), np.array(demand), np.array(depot_xy),
                         np.array(depot_cost), np.array(depot_cap), Q, name=Path(path).stem)
    except ValueError as exc:
        raise LrpParseError(path, pos, str(exc)) from None


def load_lrp(path: str | Path) -> LrpSource:
    return parse_lrp(Path(path).read_text(), str(path))


def bounding_box(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return xy.min(axis=0), xy.max(axis=0)


def coverage_radii(facility_xy: np.ndarray, factors: Sequence[float] = RADIUS_FACTORS) -> list[float]:
    lo, hi = bounding_box(facility_xy)
    diag = float(math.hypot(*(hi - lo)))
    return [f * diag for f in factors]


def coverage_sets(facility_xy: np.ndarray, customer_xy: Sequence[float], alpha: float) -> set[int]:
    """Indices of facilities within Euclidean distance ``alpha`` (inclusive) of the customer."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    d = np.hypot(*(np.asarray(facility_xy, dtype=float) - np.asarray(customer_xy, dtype=float)).T)
    return {int(i) for i in np.flatnonzero(d <= alpha)}


def fleet_size(total_demand: float, Q: float, slack: float = 1.2) -> int:
    """``ceil(slack * q(W) / Q)`` evaluated in exact rational arithmetic."""
    return math.ceil(Fraction(slack).limit_denominator(10**6) * Fraction(total_demand) / Fraction(Q))


def rescale_fleet(M: int, Q: float) -> tuple[int, float]:
    """Fewer, larger vehicles: ``max(2, ceil(M/3))`` of capacity ``Q*M/M_new``."""
    m_new = max(2, -(-M // 3))
    return m_new, float(Fraction(Q) * M / m_new)


@dataclass
class Draws:
    customer_xy: np.ndarray
    demand: np.ndarray
    noise: np.ndarray  # one capacity factor per facility
    radii: list[float]


def draw(src: LrpSource, cfg: GeneratorConfig) -> Draws:
    """All random quantities of one scenario, shared by both radius variants."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.customer_count(src.n_facilities)
    if n < 1:
        raise GenerationError("at least one customer required")
    radii = coverage_radii(src.facility_xy, cfg.radius_factors)
    lo, hi = bounding_box(src.facility_xy)
    xy = np.empty((n, 2))
    for l in range(n):
        for _ in range(MAX_RESAMPLES):
            p = rng.uniform(lo, hi)
            if all(coverage_sets(src.facility_xy, p, a) for a in radii):
                xy[l] = p
                break
        else:
            raise GenerationError(f"customer {l}: no covered location after {MAX_RESAMPLES} draws")
    top = max(1, 2 * int(src.facility_demand.sum() // n))
    demand = rng.integers(1, top + 1, size=n).astype(float)
    noise = rng.uniform(*cfg.capacity_noise, size=src.n_facilities)
    return Draws(xy, demand, noise, radii)


def build(src: LrpSource, cfg: GeneratorConfig, draws: Draws, alpha_index: int) -> Instance:
    nd = len(src.depot_xy)
    alpha = draws.radii[alpha_index - 1]
    cov = [coverage_sets(src.facility_xy, p, alpha) for p in draws.customer_xy]
    covered = np.zeros(src.n_facilities)
    for l, s in enumerate(cov):
        for i in s:
            covered[i] += draws.demand[l]
    fac_cap = np.ceil(covered * draws.noise)
    total = float(draws.demand.sum())
    M = fleet_size(total, src.vehicle_capacity, cfg.fleet_slack)
    M_new, Q_new = rescale_fleet(M, src.vehicle_capacity)
    short = [d for d in range(nd) if src.depot_capacity[d] < Q_new]
    if short:
        raise InstanceDiscarded(f"depots {short} cannot hold one full vehicle of capacity {Q_new:g}")
    return make_instance(
        depot_xy=src.depot_xy,
        facility_xy=src.facility_xy,
        customer_xy=draws.customer_xy,
        demand=draws.demand,
        coverage=[{nd + i for i in s} for s in cov],
        n_vehicles=M_new,
        vehicle_capacity=Q_new,
        depot_cost=src.depot_cost,
        depot_capacity=src.depot_capacity,
        facility_capacity=fac_cap,
        name=f"{src.name}-c{cfg.multiplier}-a{alpha_index}" if src.name else "",
    )


def generate(src: LrpSource, cfg: GeneratorConfig) -> Instance:
    return build(src, cfg, draw(src, cfg), cfg.alpha_index)


def generate_pair(src: LrpSource, cfg: GeneratorConfig) -> tuple[Instance, Instance]:
    """Both radius variants from the same customer placement and demands."""
    d = draw(src, cfg)
    return build(src, cfg, d, 1), build(src, cfg, d, 2)


def random_source(rng: np.random.Generator, n_facilities: int, n_depots: int,
                  scale: float = 100.0, demand_range: tuple[int, int] = (5, 20),
                  vehicle_capacity: float | None = None, depot_capacity: float | None = None,
                  depot_cost: tuple[float, float] = (10.0, 50.0)) -> LrpSource:
    """A synthetic source instance, handy for tests and demos."""
    fxy = rng.uniform(0, scale, size=(n_facilities, 2))
    dxy = rng.uniform(0, scale, size=(n_depots, 2))
    q = rng.integers(demand_range[0], demand_range[1] + 1, size=n_facilities).astype(float)
    Q = vehicle_capacity if vehicle_capacity is not None else float(max(q.max(), q.sum() / 2))
    cap = depot_capacity if depot_capacity is not None else float(10 * q.sum())
    return LrpSource(fxy, q, dxy, np.round(rng.uniform(*depot_cost, size=n_depots)),
                     np.full(n_depots, cap), Q, name="random")
