from typing import Any, List, Optional


class GmAmError(Exception):
    """Base class for every failure raised by the concentration toolkit."""


class DomainError(GmAmError, ValueError):
    """An argument lies outside the domain where the formula is valid."""


class ConstructionError(GmAmError, ValueError):
    """A weight family could not be built for the requested dimension."""

    def __init__(self, message: str, n: int, M: float):
        super().__init__(f"{message} (n={n}, M={M})")
        self.n = n
        self.M = M


class OptimizationFailure(GmAmError, RuntimeError):
    """No admissible moment exponent certified the requested threshold."""

    def __init__(self, message: str, best_threshold: Optional[float] = None,
                 best_s: Optional[float] = None):
        super().__init__(message)
        self.best_threshold = best_threshold
        self.best_s = best_s

    def to_dict(self) -> dict:
        return {
            "status": "failed",
            "error": str(self),
            "best_threshold": self.best_threshold,
            "best_s": self.best_s,
        }


class UsageError(GmAmError):
    """Command-line arguments violate one or more constraints."""

    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class ExperimentFailure(GmAmError, RuntimeError):
    """A Monte Carlo run stopped early; the partial state is preserved."""

    def __init__(self, message: str, partial_state: Any = None):
        super().__init__(message)
        self.partial_state = partial_state
