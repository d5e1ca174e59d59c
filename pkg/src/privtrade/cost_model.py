"""Data-holder cost functions and the oligopoly disutility transform."""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NoEquilibriumError

logger = logging.getLogger(__name__)

SINGULARITY_GUARD = 1e-12
QUAD_ABS_TOL = 1e-12
QUAD_REL_TOL = 1e-12
QUAD_LIMIT = 1000
ROOT_XTOL = 1e-15


def singular_limit(demand: float) -> float:
    """Return the first compromise amount rejected by the strategic transform."""
    return 0.5 * demand * (1.0 - SINGULARITY_GUARD)


def _check_quantity(q: float) -> float:
    q = float(q)
    if not q >= 0.0:
        raise DomainError(f"compromise amount must be non-negative, got {q!r}")
    return q


def _check_price(p: float) -> float:
    p = float(p)
    if not p >= 0.0:
        raise DomainError(f"benefit per unit must be non-negative, got {p!r}")
    return p


def _check_demand(demand: float) -> float:
    demand = float(demand)
    if not (math.isfinite(demand) and demand > 0.0):
        raise DomainError(f"total demand must be positive and finite, got {demand!r}")
    return demand


def _check_strategic(q: float, demand: float) -> Tuple[float, float]:
    q = _check_quantity(q)
    demand = _check_demand(demand)
    if q >= singular_limit(demand):
        raise DomainError(
            f"compromise amount {q!r} reaches the singularity at d/2 = {demand / 2.0!r}"
        )
    return q, demand


class CostFunction(ABC):
    """
    Private compromise cost of a data holder.

    Implementations must be strictly convex and strictly increasing on q >= 0 with
    C(0) = 0. Only ``cost``, ``marginal`` and ``inverse_marginal`` are required; the
    strategic transform D and its derivatives are derived from them.
    """

    @property
    @abstractmethod
    def base_marginal(self) -> float:
        """C'(0+), the participation threshold."""

    @abstractmethod
    def cost(self, q: float) -> float:
        ...

    @abstractmethod
    def marginal(self, q: float) -> float:
        ...

    @abstractmethod
    def inverse_marginal(self, p: float) -> float:
        """Clipped inverse of the marginal: 0 whenever ``p <= base_marginal``."""

    @abstractmethod
    def scaled(self, factor: float) -> "CostFunction":
        ...

    def d_marginal(self, q: float, demand: float) -> float:
        """Strategic marginal disutility ``(1 + q/(d - 2q)) * C'(q)``."""
        q, demand = _check_strategic(q, demand)
        return (1.0 + q / (demand - 2.0 * q)) * self.marginal(q)

    def d_cost(self, q: float, demand: float) -> float:
        """Strategic disutility D(q), the integral of ``d_marginal`` over ``[0, q]``."""
        q, demand = _check_strategic(q, demand)
        if q == 0.0:
            return 0.0
        value, _ = integrate.quad(
            self.d_marginal,
            0.0,
            q,
            args=(demand,),
            epsabs=QUAD_ABS_TOL,
            epsrel=QUAD_REL_TOL,
            limit=QUAD_LIMIT,
        )
        return float(value)

    def inverse_d_marginal(self, p: float, demand: float) -> float:
        p = _check_price(p)
        demand = _check_demand(demand)
        if p <= self.base_marginal:
            return 0.0
        upper = float(np.nextafter(singular_limit(demand), 0.0))
        if self.d_marginal(upper, demand) <= p:
            logger.debug("benefit %.6g exceeds D'(d/2 guard); clamping to %.12g", p, upper)
            return upper
        root = optimize.brentq(
            lambda q: self.d_marginal(q, demand) - p,
            0.0,
            upper,
            xtol=ROOT_XTOL,
        )
        return float(root)

    def cost_inflation(self, q: float, demand: float) -> float:
        """Amount ``D(q) - C(q)`` by which a benefit-anticipating holder overstates its cost."""
        return self.d_cost(q, demand) - self.cost(q)


@dataclass(frozen=True)
class QuadraticCost(CostFunction):
    """``C(q) = a*q + h*q**2`` with ``a >= 0`` and ``h > 0``."""

    a: float
    h: float

    def __post_init__(self) -> None:
        a = float(self.a)
        h = float(self.h)
        if not (math.isfinite(a) and a >= 0.0):
            raise DomainError(f"base marginal cost must satisfy a >= 0, got {self.a!r}")
        if not (math.isfinite(h) and h > 0.0):
            raise DomainError(f"quadratic coefficient must satisfy h > 0, got {self.h!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "h", h)

    @property
    def base_marginal(self) -> float:
        return self.a

    def cost(self, q: float) -> float:
        q = _check_quantity(q)
        return self.a * q + self.h * q * q

    def marginal(self, q: float) -> float:
        q = _check_quantity(q)
        return self.a + 2.0 * self.h * q

    def inverse_marginal(self, p: float) -> float:
        p = _check_price(p)
        return max(0.0, (p - self.a) / (2.0 * self.h))

    def d_cost(self, q: float, demand: float) -> float:
        q, demand = _check_strategic(q, demand)
        if q == 0.0:
            return 0.0
        a, h, d = self.a, self.h, demand
        # antiderivative of (1/2 + (d/2)/(d - 2x)) * (a + 2hx)
        log_term = -math.log1p(-2.0 * q / d)
        return 0.5 * a * q + 0.5 * h * q * q - 0.5 * d * h * q + 0.25 * d * (a + h * d) * log_term

    def scaled(self, factor: float) -> "QuadraticCost":
        factor = float(factor)
        if not (math.isfinite(factor) and factor > 0.0):
            raise DomainError(f"scale factor must be positive, got {factor!r}")
        return QuadraticCost(self.a * factor, self.h * factor)


@dataclass(frozen=True)
class MarketScenario:
    """Total demand plus the ordered holder cost functions."""

    demand: float
    holders: Tuple[CostFunction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "demand", _check_demand(self.demand))
        holders = tuple(self.holders)
        if not holders:
            raise DomainError("a market needs at least one data holder")
        for index, holder in enumerate(holders):
            if not isinstance(holder, CostFunction):
                raise DomainError(
                    f"holder {index} is {type(holder).__name__}, expected a CostFunction"
                )
        object.__setattr__(self, "holders", holders)

    @property
    def n(self) -> int:
        return len(self.holders)

    @property
    def order(self) -> Tuple[int, ...]:
        """Holder indices sorted by base marginal cost, ties kept in input order."""
        return tuple(sorted(range(self.n), key=lambda i: self.holders[i].base_marginal))

    @property
    def base_marginals(self) -> Tuple[float, ...]:
        return tuple(holder.base_marginal for holder in self.holders)

    def marginal_max(self, q: float) -> float:
        return max(holder.marginal(q) for holder in self.holders)

    def marginal_min(self, q: float) -> float:
        return min(holder.marginal(q) for holder in self.holders)

    def total_cost(self, allocations: Sequence[float]) -> float:
        return math.fsum(holder.cost(q) for holder, q in zip(self.holders, allocations))

    def scaled(self, factor: float) -> "MarketScenario":
        return MarketScenario(self.demand, tuple(h.scaled(factor) for h in self.holders))

    def require_oligopoly(self) -> None:
        if self.n <= 2:
            raise NoEquilibriumError(
                "no oligopolistic Nash equilibrium exists for two holders "
                f"(every holder must compromise less than d/2; got n={self.n})"
            )


def random_scenario(rng: np.random.Generator,
                    *,
                    n_range: Tuple[int, int] = (3, 8),
                    a_range: Tuple[float, float] = (0.0, 1.0),
                    h_range: Tuple[float, float] = (0.001, 1.0),
                    d_range: Tuple[float, float] = (0.5, 10.0),
                    n: Optional[int] = None) -> MarketScenario:
    """Draw a synthetic quadratic market; ranges are inclusive on ``n``."""
    count = int(n) if n is not None else int(rng.integers(n_range[0], n_range[1] + 1))
    a_values = rng.uniform(a_range[0], a_range[1], size=count)
    h_values = rng.uniform(h_range[0], h_range[1], size=count)
    demand = float(rng.uniform(d_range[0], d_range[1]))
    holders = tuple(QuadraticCost(float(a), float(h)) for a, h in zip(a_values, h_values))
    return MarketScenario(demand, holders)


__all__ = [
    "CostFunction",
    "MarketScenario",
    "QuadraticCost",
    "SINGULARITY_GUARD",
    "random_scenario",
    "singular_limit",
]
