"""Exception types for the privtrade API."""
from __future__ import annotations

from typing import TYPE_CHECKING, Optional

from .exceptions import PrivTradeError, ScenarioNotFoundError

if TYPE_CHECKING:  # pragma: no cover
    from .dynamics import Trajectory


class DomainError(PrivTradeError, ValueError):
    """Raised when an argument lies outside the domain of a cost operation."""


class PreconditionError(PrivTradeError, ValueError):
    """Raised when a solver precondition does not hold."""


class ScenarioError(PrivTradeError):
    """Raised when a scenario file cannot be parsed or fails validation."""

    def __init__(self, message: str, *, key: Optional[str] = None,
                 line: Optional[int] = None) -> None:
        self.key = key
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if key is not None:
            location.append(f"key '{key}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class UnsupportedFormatError(ScenarioError):
    """Raised when a scenario file format is not supported."""


class InterpolationError(ScenarioError):
    """Raised when environment interpolation cannot resolve a placeholder."""


class RejectedBidError(PrivTradeError):
    """Raised when the ad-network receives an all-zero bid profile."""


class NoEquilibriumError(PrivTradeError):
    """Raised when the requested equilibrium does not exist."""


class ResultMismatchError(PrivTradeError):
    """Raised when a result does not belong to the scenario or kind it is checked against."""


class DivergenceError(PrivTradeError):
    """Raised when the distributed bidding loop diverges."""

    def __init__(self, message: str, *, trajectory: "Trajectory",
                 supply_gap: float) -> None:
        super().__init__(message)
        self.trajectory = trajectory
        self.supply_gap = supply_gap


__all__ = [
    "PrivTradeError",
    "ScenarioNotFoundError",
    "DomainError",
    "PreconditionError",
    "ScenarioError",
    "UnsupportedFormatError",
    "InterpolationError",
    "RejectedBidError",
    "NoEquilibriumError",
    "ResultMismatchError",
    "DivergenceError",
]
