"""Heuristic and exact tools for the covering tour location routing problem."""

from .core import (
    CostBreakdown,
    Instance,
    MalformedSolutionError,
    Route,
    Solution,
    Violation,
    evaluate,
    is_feasible,
    make_instance,
    validate,
)
from .construction import ConstructionError, construct
from .lns import PRESETS, RunReport, StrategyConfig, apply_operator, report_gap, run_lns

__all__ = [
    "ConstructionError",
    "CostBreakdown",
    "Instance",
    "MalformedSolutionError",
    "PRESETS",
    "Route",
    "RunReport",
    "Solution",
    "StrategyConfig",
    "Violation",
    "apply_operator",
    "construct",
    "evaluate",
    "is_feasible",
    "make_instance",
    "report_gap",
    "run_lns",
    "validate",
]
__version__ = "0.1.0"
