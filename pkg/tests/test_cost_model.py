import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from privtrade import CostFunction, MarketScenario, QuadraticCost, random_scenario
from privtrade.cost_model import singular_limit
from privtrade.errors import DomainError

coefficients = st.tuples(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=1e-3, max_value=1.0),
)
demands = st.floats(min_value=0.5, max_value=10.0)
fractions = st.floats(min_value=0.0, max_value=0.49)
interior = st.floats(min_value=1e-3, max_value=0.49)


@dataclass(frozen=True)
class CubicCost(CostFunction):
    """``a q + k q^3``; exercises the generic strategic transform."""

    a: float
    k: float

    @property
    def base_marginal(self) -> float:
        return self.a

    def cost(self, q: float) -> float:
        return self.a * q + self.k * q ** 3

    def marginal(self, q: float) -> float:
        return self.a + 3.0 * self.k * q * q

    def inverse_marginal(self, p: float) -> float:
        return math.sqrt(max(0.0, p - self.a) / (3.0 * self.k))

    def scaled(self, factor: float) -> "CubicCost":
        return CubicCost(self.a * factor, self.k * factor)


@pytest.mark.parametrize("a, h, q, expected", [
    (0.1, 0.002, 0.0, 0.0),
    (0.1, 0.002, 1.0, 0.102),
    (0.2, 0.005, 2.0, 0.42),
])
def test_cost_values(a: float, h: float, q: float, expected: float) -> None:
    assert QuadraticCost(a, h).cost(q) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("a, h, q, expected", [
    (0.1, 0.002, 0.0, 0.1),
    (0.1, 0.002, 5.0, 0.12),
    (0.2, 0.005, 10.0, 0.3),
])
def test_marginal_values(a: float, h: float, q: float, expected: float) -> None:
    assert QuadraticCost(a, h).marginal(q) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("a, h, p, expected", [
    (0.1, 0.002, 0.1, 0.0),
    (0.2, 0.005, 0.1, 0.0),
    (0.1, 0.002, 0.12, 5.0),
])
def test_inverse_marginal_values(a: float, h: float, p: float, expected: float) -> None:
    assert QuadraticCost(a, h).inverse_marginal(p) == pytest.approx(expected, abs=1e-12)


def test_negative_amounts_are_rejected() -> None:
    holder = QuadraticCost(0.1, 0.002)
    with pytest.raises(DomainError):
        holder.cost(-1.0)
    with pytest.raises(DomainError):
        holder.marginal(-0.5)
    with pytest.raises(DomainError):
        holder.inverse_marginal(-0.1)


def test_invalid_coefficients_name_the_invariant() -> None:
    with pytest.raises(DomainError, match=r"h > 0"):
        QuadraticCost(0.1, 0.0)
    with pytest.raises(DomainError, match=r"a >= 0"):
        QuadraticCost(-0.1, 0.002)
    with pytest.raises(DomainError):
        QuadraticCost(0.1, float("nan"))


def test_strategic_marginal_values() -> None:
    holder = QuadraticCost(0.1, 0.002)
    assert holder.d_marginal(0.0, 2.0) == pytest.approx(0.1)
    assert holder.d_marginal(0.5, 2.0) == pytest.approx(0.153, rel=1e-12)
    assert QuadraticCost(0.2, 0.005).d_marginal(0.9999, 2.0) > 1e3


def test_strategic_marginal_rejects_singularity() -> None:
    holder = QuadraticCost(0.1, 0.002)
    with pytest.raises(DomainError, match="singularity"):
        holder.d_marginal(1.0, 2.0)
    with pytest.raises(DomainError):
        holder.d_cost(1.5, 2.0)
    with pytest.raises(DomainError):
        holder.d_marginal(singular_limit(2.0), 2.0)
    with pytest.raises(DomainError):
        holder.d_marginal(0.1, 0.0)


def test_strategic_cost_values() -> None:
    holder = QuadraticCost(0.1, 0.002)
    assert holder.d_cost(0.0, 2.0) == 0.0
    value = holder.d_cost(0.5, 2.0)
    assert value == pytest.approx(0.0602937, abs=1e-7)
    assert holder.cost(0.5) < value <= 1.5 * holder.cost(0.5)
    quadrature = CostFunction.d_cost(holder, 0.5, 2.0)
    assert value == pytest.approx(quadrature, abs=1e-10)


def test_inverse_strategic_marginal_values() -> None:
    assert QuadraticCost(0.2, 0.005).inverse_d_marginal(0.15, 2.0) == 0.0
    assert QuadraticCost(0.1, 0.002).inverse_d_marginal(0.153, 2.0) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("price", [1e3, 1e8, 1e15])
def test_inverse_strategic_marginal_approaches_half_demand(price: float) -> None:
    q = QuadraticCost(0.1, 0.002).inverse_d_marginal(price, 2.0)
    assert q < 1.0
    assert 1.0 - q < 1e-3


def test_inverse_strategic_marginal_round_trip_on_grid() -> None:
    holder = QuadraticCost(0.2, 0.005)
    demand = 2.0
    for q in np.linspace(0.0, 0.49 * demand, 100):
        price = holder.d_marginal(float(q), demand)
        assert holder.inverse_d_marginal(price, demand) == pytest.approx(q, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(coefficients, demands, interior)
def test_strategic_marginal_dominates_marginal(ah, demand, fraction) -> None:
    holder = QuadraticCost(*ah)
    q = fraction * demand
    assert holder.d_marginal(0.0, demand) == holder.marginal(0.0)
    assert holder.d_marginal(q, demand) > holder.marginal(q)
    assert holder.d_cost(q, demand) >= holder.cost(q)
    assert holder.cost_inflation(q, demand) >= 0.0


@settings(max_examples=200, deadline=None)
@given(coefficients, demands, fractions)
def test_closed_form_matches_quadrature(ah, demand, fraction) -> None:
    holder = QuadraticCost(*ah)
    q = fraction * demand
    generic = CostFunction.d_cost(holder, q, demand)
    assert holder.d_cost(q, demand) == pytest.approx(generic, rel=1e-10, abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(coefficients, demands, fractions)
def test_inverse_strategic_marginal_inverts(ah, demand, fraction) -> None:
    holder = QuadraticCost(*ah)
    q = fraction * demand
    price = holder.d_marginal(q, demand)
    assert holder.inverse_d_marginal(price, demand) == pytest.approx(q, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(coefficients, st.floats(min_value=1e-6, max_value=100.0))
def test_inverse_marginal_inverts(ah, q) -> None:
    holder = QuadraticCost(*ah)
    assert holder.inverse_marginal(holder.marginal(q)) == pytest.approx(q, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(coefficients, demands, st.lists(fractions, min_size=2, max_size=2, unique=True))
def test_strategic_marginal_is_increasing(ah, demand, pair) -> None:
    holder = QuadraticCost(*ah)
    low, high = sorted(f * demand for f in pair)
    assume(high - low > 1e-6 * demand)
    assert holder.d_marginal(low, demand) < holder.d_marginal(high, demand)


def test_cost_inflation_is_zero_without_compromise() -> None:
    assert QuadraticCost(0.3, 0.1).cost_inflation(0.0, 4.0) == 0.0


def test_scaled_multiplies_both_coefficients() -> None:
    scaled = QuadraticCost(0.1, 0.002).scaled(10.0)
    assert scaled.a == pytest.approx(1.0)
    assert scaled.h == pytest.approx(0.02)
    with pytest.raises(DomainError):
        QuadraticCost(0.1, 0.002).scaled(0.0)


def test_generic_cost_family_uses_quadrature() -> None:
    holder = CubicCost(0.1, 0.5)
    demand = 2.0
    value = holder.d_cost(0.6, demand)
    assert value > holder.cost(0.6)
    assert holder.cost_inflation(0.6, demand) == pytest.approx(value - holder.cost(0.6))
    price = holder.d_marginal(0.6, demand)
    assert holder.inverse_d_marginal(price, demand) == pytest.approx(0.6, abs=1e-9)


def test_scenario_validation() -> None:
    with pytest.raises(DomainError):
        MarketScenario(0.0, (QuadraticCost(0.1, 0.002),))
    with pytest.raises(DomainError):
        MarketScenario(-1.0, (QuadraticCost(0.1, 0.002),))
    with pytest.raises(DomainError):
        MarketScenario(1.0, ())
    with pytest.raises(DomainError):
        MarketScenario(1.0, ((0.1, 0.002),))  # type: ignore[arg-type]


def test_scenario_helpers(fitness_scenario: MarketScenario) -> None:
    assert fitness_scenario.n == 3
    assert fitness_scenario.base_marginals == (0.1, 0.2, 0.1)
    assert fitness_scenario.order == (0, 2, 1)
    assert fitness_scenario.marginal_max(2.0 / 3.0) == pytest.approx(0.2 + 0.01 * 2.0 / 3.0)
    assert fitness_scenario.marginal_min(0.0) == pytest.approx(0.1)
    assert fitness_scenario.total_cost([1.0, 0.0, 1.0]) == pytest.approx(0.102 + 0.105)

    scaled = fitness_scenario.scaled(10.0)
    assert scaled.demand == fitness_scenario.demand
    assert scaled.base_marginals == pytest.approx((1.0, 2.0, 1.0))


def test_order_is_stable_for_ties() -> None:
    scenario = MarketScenario(1.0, tuple(QuadraticCost(a, 0.1) for a in (0.2, 0.1, 0.2, 0.05)))
    assert scenario.order == (3, 1, 0, 2)


def test_random_scenario_respects_ranges() -> None:
    first = random_scenario(np.random.default_rng(7))
    second = random_scenario(np.random.default_rng(7))
    assert first == second
    assert 3 <= first.n <= 8
    assert 0.5 <= first.demand <= 10.0
    for holder in first.holders:
        assert 0.0 <= holder.a <= 1.0
        assert 1e-3 <= holder.h <= 1.0

    fixed = random_scenario(np.random.default_rng(1), n=5)
    assert fixed.n == 5
