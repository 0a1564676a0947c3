"""
Exception types shared by the estimators and the experiment runner.
"""

from typing import Any, Optional


class EstimationError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(EstimationError, ValueError):
    """A precondition on the inputs was violated."""


class NumericFailureError(EstimationError, ArithmeticError):
    """A numerical routine failed to produce a finite or converged result."""

    def __init__(self, message: str, iteration: Optional[int] = None, last_state: Any = None):
        super().__init__(message)
        self.iteration = iteration
        # Last finite iterate (or diagnostic payload) before the failure
        self.last_state = last_state

    def __str__(self) -> str:
        base = super().__str__()
        if self.iteration is None:
            return base
        return f"{base} (iteration {self.iteration})"


class AcceptanceError(EstimationError):
    """An experiment's acceptance assertion did not hold."""
