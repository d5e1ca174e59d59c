"""Efficiency loss between competitive and oligopolistic equilibria."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO, Any, Dict, Iterator, List, Optional, Sequence, Union

from joblib import Parallel, delayed

from .cost_model import MarketScenario, QuadraticCost
from .equilibrium import EquilibriumKind, EquilibriumResult, solve_one, solve_pce
from .errors import DomainError, PreconditionError, ResultMismatchError

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
MATCH_TOLERANCE = 1e-6


@dataclass(frozen=True)
class EfficiencyReport:
    """
    PCE against ONE for one scenario.

    ``cost_bound`` and ``cost_bound_holds`` are ``None`` when the largest competitive
    allocation reaches d/2 and the cost bound does not apply.
    """

    n: int
    p_pce: float
    p_one: float
    c_pce: float
    c_one: float
    price_ratio: float
    cost_ratio: float
    m_max: float
    m_min: float
    price_bound: float
    q_max: float
    cost_bound: Optional[float]
    participation_superset: bool
    ordering_holds: bool
    price_floor_holds: bool
    price_bound_holds: bool
    cost_bound_holds: Optional[bool]

    @property
    def bounds_hold(self) -> bool:
        return (self.participation_superset
                and self.ordering_holds
                and self.price_floor_holds
                and self.price_bound_holds
                and self.cost_bound_holds is not False)

    def as_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["bounds_hold"] = self.bounds_hold
        return payload


def _check_pair(pce: EquilibriumResult,
                one: EquilibriumResult,
                scenario: MarketScenario) -> None:
    if pce.kind is not EquilibriumKind.PCE or one.kind is not EquilibriumKind.ONE:
        raise ResultMismatchError(
            f"expected a PCE and a ONE result, got {pce.kind.value} and {one.kind.value}"
        )
    for result in (pce, one):
        if result.allocations.shape != (scenario.n,):
            raise ResultMismatchError(
                f"{result.kind.value} result has {result.allocations.shape[0]} holders, "
                f"scenario has {scenario.n}"
            )
        supplied = float(result.allocations.sum())
        recomputed = scenario.total_cost(result.allocations.tolist())
        if (abs(supplied - scenario.demand) > MATCH_TOLERANCE * scenario.demand
                or abs(recomputed - result.total_cost) > MATCH_TOLERANCE * max(1.0, recomputed)):
            raise ResultMismatchError(
                f"{result.kind.value} result was not solved from this scenario"
            )


def efficiency_report(pce: EquilibriumResult,
                      one: EquilibriumResult,
                      scenario: MarketScenario) -> EfficiencyReport:
    """
    Ratios ``p*/p`` and ``C*/C`` with their closed-form bounds.

    Price: ``p >= m`` and ``p* <= (n-1)/(n-2) M`` with ``M, m`` the extreme marginals at
    ``d/n``. Cost: ``C* <= (1 + q_max/(d - 2 q_max)) C`` whenever ``q_max < d/2``.
    """
    scenario.require_oligopoly()
    _check_pair(pce, one, scenario)

    n = scenario.n
    demand = scenario.demand
    share = demand / n
    m_max = scenario.marginal_max(share)
    m_min = scenario.marginal_min(share)
    price_ratio = one.benefit / pce.benefit
    cost_ratio = one.total_cost / pce.total_cost
    price_bound = (n - 1) / (n - 2) * m_max / m_min
    q_max = float(pce.allocations.max())
    if q_max < demand / 2.0:
        cost_bound: Optional[float] = 1.0 + q_max / (demand - 2.0 * q_max)
        cost_bound_holds: Optional[bool] = cost_ratio <= cost_bound + BOUND_SLACK
    else:
        cost_bound = None
        cost_bound_holds = None

    report = EfficiencyReport(
        n=n,
        p_pce=pce.benefit,
        p_one=one.benefit,
        c_pce=pce.total_cost,
        c_one=one.total_cost,
        price_ratio=price_ratio,
        cost_ratio=cost_ratio,
        m_max=m_max,
        m_min=m_min,
        price_bound=price_bound,
        q_max=q_max,
        cost_bound=cost_bound,
        participation_superset=pce.participants <= one.participants,
        ordering_holds=price_ratio >= 1.0 - BOUND_SLACK and cost_ratio >= 1.0 - BOUND_SLACK,
        price_floor_holds=pce.benefit >= m_min * (1.0 - BOUND_SLACK),
        price_bound_holds=price_ratio <= price_bound + BOUND_SLACK,
        cost_bound_holds=cost_bound_holds,
    )
    if not report.bounds_hold:
        logger.warning("efficiency bounds violated: %s", report.as_dict())
    return report


def analyse(scenario: MarketScenario) -> EfficiencyReport:
    """Solve both equilibria of ``scenario`` and compare them."""
    return efficiency_report(solve_pce(scenario), solve_one(scenario), scenario)


def worst_case_scenario(r: float, c: float = 1.0, d: float = 1.0) -> MarketScenario:
    """
    One cheap holder ``c q^2 / (2r)`` against two at ``c q^2 / 2``.

    As ``r`` grows the cheap holder takes nearly all demand competitively, while
    strategically it is held below d/2.
    """
    for name, value in (("r", r), ("c", c), ("d", d)):
        if not float(value) > 0.0:
            raise DomainError(f"worst-case parameter {name} must be positive, got {value!r}")
    r, c = float(r), float(c)
    cheap = QuadraticCost(0.0, c / (2.0 * r))
    dear = QuadraticCost(0.0, c / 2.0)
    return MarketScenario(float(d), (cheap, dear, dear))


@dataclass(frozen=True)
class SweepRow:
    r: float
    p_pce: float
    p_one: float
    c_pce: float
    c_one: float
    price_ratio: float
    cost_ratio: float


SWEEP_COLUMNS = ("r", "p_pce", "p_one", "c_pce", "c_one", "price_ratio", "cost_ratio")


@dataclass(frozen=True)
class SweepTable:
    c: float
    d: float
    rows: List[SweepRow]

    def __iter__(self) -> Iterator[SweepRow]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def cost_ratios(self) -> List[float]:
        return [row.cost_ratio for row in self.rows]

    def write_csv(self, target: Union[str, Path, IO[str]]) -> None:
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
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            writer.writerow([format(getattr(row, column), ".12g") for column in SWEEP_COLUMNS])


def _sweep_row(r: float, c: float, d: float) -> SweepRow:
    scenario = worst_case_scenario(r, c, d)
    pce = solve_pce(scenario)
    one = solve_one(scenario)
    return SweepRow(
        r=r,
        p_pce=pce.benefit,
        p_one=one.benefit,
        c_pce=pce.total_cost,
        c_one=one.total_cost,
        price_ratio=one.benefit / pce.benefit,
        cost_ratio=one.total_cost / pce.total_cost,
    )


def poa_sweep(r_values: Sequence[float],
              c: float = 1.0,
              d: float = 1.0,
              *,
              n_jobs: int = 1) -> SweepTable:
    """Price of anarchy of the worst-case family for each heterogeneity ``r``."""
    values = [float(r) for r in r_values]
    if not values:
        raise PreconditionError("r_values must not be empty")
    if any(not r > 0.0 for r in values):
        raise PreconditionError("r_values must be positive")
    if values != sorted(values):
        raise PreconditionError("r_values must be sorted ascending")

    if n_jobs == 1:
        rows = [_sweep_row(r, c, d) for r in values]
    else:
        rows = Parallel(n_jobs=n_jobs)(delayed(_sweep_row)(r, c, d) for r in values)

    ratios = [row.cost_ratio for row in rows]
    if any(later < earlier - BOUND_SLACK for earlier, later in zip(ratios, ratios[1:])):
        logger.warning("cost ratio is not monotone over the sweep: %s", ratios)
    return SweepTable(float(c), float(d), list(rows))


__all__ = [
    "EfficiencyReport",
    "SWEEP_COLUMNS",
    "SweepRow",
    "SweepTable",
    "analyse",
    "efficiency_report",
    "poa_sweep",
    "worst_case_scenario",
]
