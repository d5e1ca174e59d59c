"""Exact competitive and oligopolistic equilibria of the supply-function market."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, FrozenSet, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import optimize
from typing_extensions import TypeAlias

from .cost_model import CostFunction, MarketScenario
from .errors import (
    NoEquilibriumError,
    PreconditionError,
    RejectedBidError,
    ResultMismatchError,
)

logger = logging.getLogger(__name__)

FloatArray: TypeAlias = NDArray[np.float64]
Response: TypeAlias = Callable[[CostFunction, float], float]

PRICE_XTOL = 1e-14
PRICE_RTOL = 4.0 * float(np.finfo(float).eps)
KKT_TOLERANCE = 1e-8
BALANCE_TOLERANCE = 1e-9
BEST_RESPONSE_XATOL = 1e-10
MAX_BRACKET_DOUBLINGS = 1100


class EquilibriumKind(str, Enum):
    PCE = "PCE"
    ONE = "ONE"


KindLike = Union[EquilibriumKind, str]


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """
    Benefit, allocations and bids at an equilibrium, in the scenario's holder order.

    ``bids[i] == allocations[i] / benefit`` and ``participants`` holds the indices with
    a positive allocation.
    """

    kind: EquilibriumKind
    benefit: float
    allocations: FloatArray
    bids: FloatArray
    participants: FrozenSet[int]
    total_cost: float

    @classmethod
    def from_allocations(cls,
                         kind: KindLike,
                         benefit: float,
                         allocations: Sequence[float],
                         scenario: MarketScenario) -> "EquilibriumResult":
        benefit = float(benefit)
        if not (math.isfinite(benefit) and benefit > 0.0):
            raise PreconditionError(f"equilibrium benefit must be positive, got {benefit!r}")
        q = np.array(allocations, dtype=float)
        if q.shape != (scenario.n,):
            raise ResultMismatchError(
                f"expected {scenario.n} allocations, got shape {q.shape}"
            )
        bids = q / benefit
        participants = frozenset(int(i) for i in np.flatnonzero(q > 0.0))
        total = scenario.total_cost(q.tolist())
        q.setflags(write=False)
        bids.setflags(write=False)
        return cls(EquilibriumKind(kind), benefit, q, bids, participants, total)

    @property
    def total_payment(self) -> float:
        """What the ad-network pays: benefit times the cleared amount."""
        return self.benefit * math.fsum(self.allocations.tolist())

    def as_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "benefit": self.benefit,
            "allocations": self.allocations.tolist(),
            "bids": self.bids.tolist(),
            "participants": sorted(self.participants),
            "total_cost": self.total_cost,
            "total_payment": self.total_payment,
        }


@dataclass(frozen=True, eq=False)
class KKTReport:
    kind: EquilibriumKind
    residuals: FloatArray
    max_residual: float
    balance_residual: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class BestResponse:
    bid: float
    payoff: float


def market_clearing_price(bids: Sequence[float], demand: float) -> float:
    """Return ``d / sum(b)``; an all-zero profile is rejected by the ad-network."""
    demand = float(demand)
    if not demand > 0.0:
        raise PreconditionError(f"total demand must be positive, got {demand!r}")
    profile = np.asarray(bids, dtype=float)
    if np.any(profile < 0.0):
        raise PreconditionError("supply-function bids must be non-negative")
    total = math.fsum(profile.tolist())
    if total <= 0.0:
        raise RejectedBidError("the ad-network rejects a bid profile that sums to zero")
    return demand / total


def _competitive_response(holder: CostFunction, price: float) -> float:
    return holder.inverse_marginal(price)


def _strategic_response(demand: float) -> Response:
    def response(holder: CostFunction, price: float) -> float:
        return holder.inverse_d_marginal(price, demand)
    return response


def _supply(scenario: MarketScenario, price: float, response: Response) -> float:
    return math.fsum(response(holder, price) for holder in scenario.holders)


def _clear(scenario: MarketScenario,
           response: Response,
           lower: float,
           upper: float) -> float:
    demand = scenario.demand

    def excess(price: float) -> float:
        return _supply(scenario, price, response) - demand

    low_gap, high_gap = excess(lower), excess(upper)
    if low_gap > 0.0 or high_gap < 0.0:
        raise PreconditionError(
            f"bracket [{lower:.12g}, {upper:.12g}] does not enclose the clearing benefit"
        )
    if high_gap == 0.0:
        return upper
    return float(optimize.brentq(excess, lower, upper, xtol=PRICE_XTOL, rtol=PRICE_RTOL))


def _enclose(scenario: MarketScenario,
             response: Response,
             lower: float,
             upper: float) -> float:
    """Double ``upper`` until the supply there covers the demand."""
    upper = max(upper, lower, 1e-300)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if _supply(scenario, upper, response) >= scenario.demand:
            return upper
        upper *= 2.0
    raise NoEquilibriumError("supply never reaches the demand")


def _settle(scenario: MarketScenario,
            kind: EquilibriumKind,
            price: float,
            response: Response) -> EquilibriumResult:
    allocations = np.array([response(holder, price) for holder in scenario.holders])
    supplied = math.fsum(allocations.tolist())
    # the root is exact to a few ulps in price; scaling restores sum(q) == d
    if supplied > 0.0:
        allocations *= scenario.demand / supplied
    result = EquilibriumResult.from_allocations(kind, price, allocations, scenario)
    logger.debug("%s cleared at p=%.12g, participants=%s",
                 kind.value, price, sorted(result.participants))
    return result


def solve_pce(scenario: MarketScenario,
              *,
              bracket: Optional[Tuple[float, float]] = None) -> EquilibriumResult:
    """
    Perfectly competitive equilibrium by monotone waterfilling on the benefit.

    The aggregate supply ``sum_i (C'_i)^{-1}(p)`` is continuous and nondecreasing, zero
    at the cheapest base marginal and at least ``d`` at ``max_i C'_i(d)``.
    """
    if bracket is None:
        lower = min(scenario.base_marginals)
        # C'(d) can invert to a hair below d, so the bracket is grown until it covers d
        upper = _enclose(scenario, _competitive_response, lower,
                         scenario.marginal_max(scenario.demand))
    else:
        lower, upper = (float(v) for v in bracket)
    price = _clear(scenario, _competitive_response, lower, upper)
    return _settle(scenario, EquilibriumKind.PCE, price, _competitive_response)


def solve_one(scenario: MarketScenario,
              *,
              bracket: Optional[Tuple[float, float]] = None) -> EquilibriumResult:
    """
    Oligopolistic Nash equilibrium: the benefit at which strategic supplies
    ``sum_i (D'_i)^{-1}(p)`` clear the demand. Requires at least three holders.
    """
    scenario.require_oligopoly()
    response = _strategic_response(scenario.demand)
    if bracket is None:
        lower = min(scenario.base_marginals)
        upper = _enclose(scenario, response, lower,
                         scenario.marginal_max(scenario.demand / scenario.n))
        logger.debug("ONE bracket [%.12g, %.12g]", lower, upper)
    else:
        lower, upper = (float(v) for v in bracket)
    price = _clear(scenario, response, lower, upper)
    return _settle(scenario, EquilibriumKind.ONE, price, response)


def solve(scenario: MarketScenario, kind: KindLike) -> EquilibriumResult:
    if EquilibriumKind(kind) is EquilibriumKind.PCE:
        return solve_pce(scenario)
    return solve_one(scenario)


def _check_result(result: EquilibriumResult, scenario: MarketScenario) -> None:
    if result.allocations.shape != (scenario.n,):
        raise ResultMismatchError(
            f"result has {result.allocations.shape[0]} holders, scenario has {scenario.n}"
        )


def verify_kkt(result: EquilibriumResult,
               scenario: MarketScenario,
               *,
               kind: Optional[KindLike] = None) -> KKTReport:
    """
    Residuals of the equilibrium conditions: equal (strategic) marginals among
    participants, no profitable entry for the rest, and demand balance.
    """
    if kind is not None and EquilibriumKind(kind) is not result.kind:
        raise ResultMismatchError(
            f"expected a {EquilibriumKind(kind).value} result, got {result.kind.value}"
        )
    _check_result(result, scenario)

    demand = scenario.demand
    price = result.benefit
    if result.kind is EquilibriumKind.PCE:
        def slope(holder: CostFunction, q: float) -> float:
            return holder.marginal(q)
    else:
        def slope(holder: CostFunction, q: float) -> float:
            return holder.d_marginal(q, demand)

    residuals = np.empty(scenario.n)
    for index, (holder, q) in enumerate(zip(scenario.holders, result.allocations.tolist())):
        if index in result.participants:
            residuals[index] = abs(slope(holder, q) - price)
        else:
            residuals[index] = max(0.0, price - slope(holder, 0.0))

    tolerance = KKT_TOLERANCE * max(1.0, price)
    balance = abs(math.fsum(result.allocations.tolist()) - demand)
    max_residual = float(residuals.max())
    passed = max_residual <= tolerance and balance <= BALANCE_TOLERANCE * demand
    residuals.setflags(write=False)
    return KKTReport(result.kind, residuals, max_residual, balance, tolerance, passed)


def payoff(index: int,
           bid: float,
           b_others: Sequence[float],
           scenario: MarketScenario) -> float:
    """Net revenue ``p(b) q_i - C_i(q_i)`` of holder ``index`` under the clearing rule."""
    others = math.fsum(np.asarray(b_others, dtype=float).tolist())
    price = scenario.demand / (bid + others)
    q = bid * price
    return price * q - scenario.holders[index].cost(q)


def best_response(index: int,
                  b_others: Sequence[float],
                  scenario: MarketScenario) -> BestResponse:
    """
    Payoff-maximising bid of holder ``index`` against the other holders' bids.

    The optimum lies in ``[0, B_-i]`` (it keeps the holder below d/2), searched with a
    bounded golden-section/Brent method and polished on the first-order condition.
    """
    if not 0 <= index < scenario.n:
        raise PreconditionError(f"holder index {index} outside 0..{scenario.n - 1}")
    others = np.asarray(b_others, dtype=float)
    if others.shape != (scenario.n - 1,):
        raise PreconditionError(
            f"expected {scenario.n - 1} competing bids, got shape {others.shape}"
        )
    if np.any(others < 0.0):
        raise PreconditionError("competing bids must be non-negative")
    total_others = math.fsum(others.tolist())
    if total_others <= 0.0:
        raise PreconditionError(
            "competing bids sum to zero; the holder's payoff has no maximiser"
        )

    solution = optimize.minimize_scalar(
        lambda b: -payoff(index, b, others, scenario),
        bounds=(0.0, total_others),
        method="bounded",
        options={"xatol": BEST_RESPONSE_XATOL},
    )
    # zero bid earns exactly zero
    if -float(solution.fun) <= 0.0:
        return BestResponse(0.0, 0.0)
    bid = _polish_bid(scenario.holders[index], scenario.demand, total_others,
                      float(solution.x))
    return BestResponse(bid, payoff(index, bid, others, scenario))


def _polish_bid(holder: CostFunction, demand: float, total_others: float, bid: float) -> float:
    """
    Sharpen a bounded-search bid through the first-order condition in quantity.

    With ``q = d b / (b + B)`` the payoff is ``q (d - q) / B - C(q)``, concave in ``q``,
    so its maximiser is the root of ``(d - 2q) / B - C'(q)`` on ``[0, d/2]``.
    """
    def slope(q: float) -> float:
        return (demand - 2.0 * q) / total_others - holder.marginal(q)

    half = demand / 2.0
    if slope(0.0) <= 0.0 or slope(half) >= 0.0:
        return bid
    q = float(optimize.brentq(slope, 0.0, half, xtol=PRICE_XTOL, rtol=PRICE_RTOL))
    return q * total_others / (demand - q)


def individual_rationality(result: EquilibriumResult,
                           scenario: MarketScenario) -> FloatArray:
    """Per-holder net revenue ``p q_i - C_i(q_i)``."""
    _check_result(result, scenario)
    price = result.benefit
    return np.array([
        price * q - holder.cost(q)
        for holder, q in zip(scenario.holders, result.allocations.tolist())
    ])


__all__ = [
    "BestResponse",
    "EquilibriumKind",
    "EquilibriumResult",
    "KKTReport",
    "best_response",
    "individual_rationality",
    "market_clearing_price",
    "payoff",
    "solve",
    "solve_one",
    "solve_pce",
    "verify_kkt",
]
