"""Distributed supply-function bidding between data holders and the ad-network."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, List, Optional, Tuple, Union

import numpy as np

from .cost_model import CostFunction, MarketScenario
from .equilibrium import EquilibriumKind, EquilibriumResult, KindLike
from .errors import DivergenceError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 100_000
DIVERGENCE_GAP_FACTOR = 1e6


@dataclass(frozen=True)
class Tolerance:
    absolute: float = 1e-8
    relative: float = 1e-8

    def __post_init__(self) -> None:
        if not (self.absolute >= 0.0 and self.relative >= 0.0):
            raise PreconditionError("tolerances must be non-negative")


@dataclass(frozen=True)
class DynamicsSettings:
    """Bidding-loop parameters; ``None`` picks the scenario-derived default."""

    p0: Optional[float] = None
    step_size: Optional[float] = None
    max_iters: int = DEFAULT_MAX_ITERS
    tol_abs: float = 1e-8
    tol_rel: float = 1e-8

    @property
    def tolerance(self) -> Tolerance:
        return Tolerance(self.tol_abs, self.tol_rel)


@dataclass(frozen=True)
class IterationRecord:
    k: int
    price: float
    bids: Tuple[float, ...]
    supply_gap: float
    price_step: float


@dataclass
class Trajectory:
    kind: EquilibriumKind
    demand: float
    step_size: float
    records: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    final: Optional[EquilibriumResult] = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def last(self) -> IterationRecord:
        return self.records[-1]

    def distance_to(self, result: EquilibriumResult) -> float:
        """Largest deviation in benefit or allocation from an exact equilibrium."""
        record = self.last
        allocations = np.asarray(record.bids) * record.price
        return max(abs(record.price - result.benefit),
                   float(np.max(np.abs(allocations - result.allocations))))

    def write_csv(self, target: Union[str, Path, IO[str]]) -> None:
        """Write ``k, p, b_1..b_n, supply_gap, price_step`` with 12 significant digits."""
        if isinstance(target, (str, Path)):
            with Path(target).open("w", encoding="utf-8", newline="") as fh:
                self._write_rows(fh)
        else:
            self._write_rows(target)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        self._write_rows(buffer)
        return buffer.getvalue()

    def _write_rows(self, fh: IO[str]) -> None:
        n = len(self.records[0].bids) if self.records else 0
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "p", *(f"b_{i + 1}" for i in range(n)), "supply_gap", "price_step"])
        for record in self.records:
            writer.writerow([
                record.k,
                _fmt(record.price),
                *(_fmt(b) for b in record.bids),
                _fmt(record.supply_gap),
                _fmt(record.price_step),
            ])


def _fmt(value: float) -> str:
    return format(value, ".12g")


def default_initial_price(scenario: MarketScenario) -> float:
    """Holder-scale guess ``max_i C'_i(d/n)``."""
    return scenario.marginal_max(scenario.demand / scenario.n)


def recommend_step_size(scenario: MarketScenario) -> float:
    """
    ``1 / (2 * sum_i b_i)`` with competitive bids taken at ``max_i C'_i(d/n)``.

    Contracts empirically on quadratic costs; not a proven bound.
    """
    price = default_initial_price(scenario)
    total = math.fsum(holder.inverse_marginal(price) / price for holder in scenario.holders)
    return 1.0 / (2.0 * total)


def _competitive_bid(holder: CostFunction, price: float, demand: float) -> float:
    return holder.inverse_marginal(price) / price


def _strategic_bid(holder: CostFunction, price: float, demand: float) -> float:
    return holder.inverse_d_marginal(price, demand) / price


def _run(scenario: MarketScenario,
         kind: EquilibriumKind,
         p0: Optional[float],
         step_size: Optional[float],
         max_iters: int,
         tol: Tolerance) -> Trajectory:
    price = default_initial_price(scenario) if p0 is None else float(p0)
    step_size = recommend_step_size(scenario) if step_size is None else float(step_size)
    if not (math.isfinite(price) and price > 0.0):
        raise PreconditionError(f"initial benefit must be positive, got {price!r}")
    if not (math.isfinite(step_size) and step_size > 0.0):
        raise PreconditionError(f"step size must be positive, got {step_size!r}")
    if max_iters < 1:
        raise PreconditionError(f"max_iters must be at least 1, got {max_iters!r}")

    bid_rule = _competitive_bid if kind is EquilibriumKind.PCE else _strategic_bid
    demand = scenario.demand
    gap_tolerance = tol.absolute + tol.relative * demand
    gap_limit = DIVERGENCE_GAP_FACTOR * demand
    trajectory = Trajectory(kind, demand, step_size)
    zero_prices = 0

    logger.debug("%s bidding from p0=%.12g with step %.6g", kind.value, price, step_size)
    for k in range(max_iters):
        # holders answer the same announced benefit; at p = 0 nobody supplies
        if price > 0.0:
            bids = tuple(bid_rule(holder, price, demand) for holder in scenario.holders)
        else:
            bids = (0.0,) * scenario.n
        supply_gap = math.fsum(b * price for b in bids) - demand
        next_price = max(0.0, price - step_size * supply_gap)
        price_step = abs(next_price - price)
        trajectory.records.append(IterationRecord(k, price, bids, supply_gap, price_step))

        if abs(supply_gap) <= gap_tolerance and price_step <= tol.absolute * max(1.0, price):
            trajectory.converged = True
            break
        if abs(supply_gap) > gap_limit:
            raise _diverged(trajectory, f"supply gap {supply_gap:.6g} exceeds {gap_limit:.6g}")
        if next_price == 0.0:
            zero_prices += 1
            # every zero restarts the map at step_size * d, so a second one is a cycle
            if zero_prices >= 2:
                raise _diverged(trajectory, "benefit projected to zero twice")
        price = next_price

    record = trajectory.last
    if record.price > 0.0:
        trajectory.final = EquilibriumResult.from_allocations(
            kind, record.price, [b * record.price for b in record.bids], scenario)
    if trajectory.converged:
        logger.info("%s bidding converged after %d iterations at p=%.12g",
                    kind.value, trajectory.iterations, record.price)
    else:
        logger.warning("%s bidding stopped after %d iterations with supply gap %.6g",
                       kind.value, trajectory.iterations, record.supply_gap)
    return trajectory


def _diverged(trajectory: Trajectory, reason: str) -> DivergenceError:
    gap = trajectory.last.supply_gap
    logger.warning("%s bidding diverged at k=%d: %s", trajectory.kind.value,
                   trajectory.last.k, reason)
    return DivergenceError(
        f"bidding diverged after {trajectory.iterations} iterations ({reason}); "
        f"final supply gap {gap:.12g}; reduce the step size",
        trajectory=trajectory,
        supply_gap=gap,
    )


def run_competitive_bidding(scenario: MarketScenario,
                            p0: Optional[float] = None,
                            step_size: Optional[float] = None,
                            max_iters: int = DEFAULT_MAX_ITERS,
                            tol: Tolerance = Tolerance()) -> Trajectory:
    """Benefit-taking holders bid ``[(C'_i)^{-1}(p)/p]^+``; the broker steps on excess supply."""
    return _run(scenario, EquilibriumKind.PCE, p0, step_size, max_iters, tol)


def run_oligopoly_bidding(scenario: MarketScenario,
                          p0: Optional[float] = None,
                          step_size: Optional[float] = None,
                          max_iters: int = DEFAULT_MAX_ITERS,
                          tol: Tolerance = Tolerance()) -> Trajectory:
    """Benefit-anticipating variant bidding ``[(D'_i)^{-1}(p)/p]^+``; needs three holders."""
    scenario.require_oligopoly()
    return _run(scenario, EquilibriumKind.ONE, p0, step_size, max_iters, tol)


def run_bidding(scenario: MarketScenario,
                kind: KindLike,
                settings: DynamicsSettings = DynamicsSettings()) -> Trajectory:
    runner = (run_competitive_bidding if EquilibriumKind(kind) is EquilibriumKind.PCE
              else run_oligopoly_bidding)
    return runner(scenario, settings.p0, settings.step_size, settings.max_iters,
                  settings.tolerance)


__all__ = [
    "DynamicsSettings",
    "IterationRecord",
    "Tolerance",
    "Trajectory",
    "default_initial_price",
    "recommend_step_size",
    "run_bidding",
    "run_competitive_bidding",
    "run_oligopoly_bidding",
]
