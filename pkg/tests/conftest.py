from itertools import combinations
from pathlib import Path
from typing import Callable, List, NamedTuple, Tuple

import numpy as np
import pytest

from privtrade import (
    EquilibriumResult,
    MarketScenario,
    QuadraticCost,
    random_scenario,
    solve_one,
    solve_pce,
)

SUITE_SEED = 20240517
SUITE_SIZE = 100


class SolvedScenario(NamedTuple):
    scenario: MarketScenario
    pce: EquilibriumResult
    one: EquilibriumResult


def brute_force_allocation(scenario: MarketScenario) -> Tuple[float, np.ndarray]:
    """
    Minimise sum(a q + h q^2) s.t. sum(q) = d, q >= 0 by trying every support set.

    On a fixed support the KKT system is linear: q_i = (p - a_i) / (2 h_i) with
    p chosen so the support clears d. The cheapest feasible support is optimal.
    """
    a = np.array([holder.a for holder in scenario.holders])
    h = np.array([holder.h for holder in scenario.holders])
    d = scenario.demand
    best_cost = np.inf
    best = (np.nan, np.zeros(scenario.n))
    for size in range(1, scenario.n + 1):
        for support in combinations(range(scenario.n), size):
            idx = list(support)
            price = (d + np.sum(a[idx] / (2 * h[idx]))) / np.sum(1 / (2 * h[idx]))
            q = np.zeros(scenario.n)
            q[idx] = (price - a[idx]) / (2 * h[idx])
            if np.any(q < -1e-12):
                continue
            cost = float(np.sum(a * q + h * q * q))
            if cost < best_cost:
                best_cost = cost
                best = (float(price), q)
    return best


@pytest.fixture
def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def fitness_scenario() -> MarketScenario:
    return MarketScenario(2.0, (
        QuadraticCost(0.1, 0.002),
        QuadraticCost(0.2, 0.005),
        QuadraticCost(0.1, 0.005),
    ))


@pytest.fixture
def symmetric_scenario() -> MarketScenario:
    return MarketScenario(3.0, (QuadraticCost(0.1, 0.002),) * 3)


@pytest.fixture
def duopoly_scenario() -> MarketScenario:
    return MarketScenario(2.0, (QuadraticCost(0.1, 0.002), QuadraticCost(0.2, 0.005)))


@pytest.fixture
def oracle() -> Callable[[MarketScenario], Tuple[float, np.ndarray]]:
    return brute_force_allocation


@pytest.fixture(scope="session")
def random_suite() -> List[SolvedScenario]:
    rng = np.random.default_rng(SUITE_SEED)
    suite = []
    for _ in range(SUITE_SIZE):
        scenario = random_scenario(rng)
        suite.append(SolvedScenario(scenario, solve_pce(scenario), solve_one(scenario)))
    return suite
