"""
Trial and experiment output records for the runner.
"""

from typing import Any, Dict, List, Optional

from pydantic import Field

from .base import Base


class TrialResult(Base):
    """Outcome of one seeded Monte Carlo trial."""

    trial: int
    seed: int
    success: bool
    iterations: int = 0
    metrics: Dict[str, float] = Field(default_factory=dict)
    wall_time: float = 0.0
    error: Optional[str] = None
    # Per-record CSV rows for experiments that emit curves
    rows: List[List[Any]] = Field(default_factory=list)

    def __repr__(self) -> str:
        return f"<TrialResult(trial={self.trial}, success={self.success}, iterations={self.iterations})>"


class AcceptanceCheck(Base):
    """A named pass/fail assertion evaluated on an experiment's results."""

    name: str
    passed: bool
    detail: str = ''


class ExperimentOutput(Base):
    """CSV-ready rows plus the acceptance checks of one experiment run."""

    experiment: str
    header: List[str]
    rows: List[List[Any]]
    checks: List[AcceptanceCheck] = Field(default_factory=list)
    trials: List[TrialResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
