"""
privtrade public API.
"""
from __future__ import annotations

import logging

from .cost_model import CostFunction, MarketScenario, QuadraticCost, random_scenario
from .dynamics import (
    DynamicsSettings,
    IterationRecord,
    Tolerance,
    Trajectory,
    recommend_step_size,
    run_bidding,
    run_competitive_bidding,
    run_oligopoly_bidding,
)
from .efficiency import (
    EfficiencyReport,
    SweepRow,
    SweepTable,
    analyse,
    efficiency_report,
    poa_sweep,
    worst_case_scenario,
)
from .equilibrium import (
    BestResponse,
    EquilibriumKind,
    EquilibriumResult,
    KKTReport,
    best_response,
    individual_rationality,
    market_clearing_price,
    payoff,
    solve,
    solve_one,
    solve_pce,
    verify_kkt,
)
from .errors import (
    DivergenceError,
    DomainError,
    InterpolationError,
    NoEquilibriumError,
    PreconditionError,
    PrivTradeError,
    RejectedBidError,
    ResultMismatchError,
    ScenarioError,
    ScenarioNotFoundError,
    UnsupportedFormatError,
)
from .loader import ScenarioFile, ScenarioLoader, export_scenario, load_scenario
from .sources import DictOverlay, EnvSource, FileSource

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.3.0"

__all__ = [
    "BestResponse",
    "CostFunction",
    "DictOverlay",
    "DivergenceError",
    "DomainError",
    "DynamicsSettings",
    "EfficiencyReport",
    "EnvSource",
    "EquilibriumKind",
    "EquilibriumResult",
    "FileSource",
    "InterpolationError",
    "IterationRecord",
    "KKTReport",
    "MarketScenario",
    "NoEquilibriumError",
    "PreconditionError",
    "PrivTradeError",
    "QuadraticCost",
    "RejectedBidError",
    "ResultMismatchError",
    "ScenarioError",
    "ScenarioFile",
    "ScenarioLoader",
    "ScenarioNotFoundError",
    "SweepRow",
    "SweepTable",
    "Tolerance",
    "Trajectory",
    "UnsupportedFormatError",
    "analyse",
    "best_response",
    "efficiency_report",
    "export_scenario",
    "individual_rationality",
    "load_scenario",
    "market_clearing_price",
    "payoff",
    "poa_sweep",
    "random_scenario",
    "recommend_step_size",
    "run_bidding",
    "run_competitive_bidding",
    "run_oligopoly_bidding",
    "solve",
    "solve_one",
    "solve_pce",
    "verify_kkt",
    "worst_case_scenario",
]
