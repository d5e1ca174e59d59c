class PrivTradeError(RuntimeError):
    """Base exception for privtrade errors."""


class ScenarioNotFoundError(PrivTradeError):
    """Raised when a scenario file cannot be located."""
