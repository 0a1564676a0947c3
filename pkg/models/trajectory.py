"""
Per-iteration records produced by the three solvers.
"""

from typing import List, Optional

import numpy as np
from pydantic import Field

from .base import Base


class TrajectoryBase(Base):
    """Fields shared by every solver run."""

    iterations: int = 0
    converged: bool = False
    stop_reason: str = 'max_iters'
    eta: float = 0.0
    # Iterates at the recorded iterations (only when the config asks to keep them)
    iterates: List[np.ndarray] = Field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        """Values of one record field as an array, in iteration order."""
        return np.array([getattr(record, name) for record in self.records])  # type: ignore[attr-defined]

    @property
    def recorded_iterations(self) -> List[int]:
        return [record.iteration for record in self.records]  # type: ignore[attr-defined]


class PrRecord(Base):
    iteration: int
    loss: float
    dist: float = float('nan')
    rel_dist: float = float('nan')
    incoherence_raw: float = float('nan')
    incoherence_diff: float = float('nan')


class PrTrajectory(TrajectoryBase):
    records: List[PrRecord] = Field(default_factory=list)
    initial: Optional[np.ndarray] = None
    final: Optional[np.ndarray] = None


class McRecord(Base):
    iteration: int
    loss: float
    err_fro: float = float('nan')
    err_op: float = float('nan')
    err_2inf: float = float('nan')
    err_entrywise: float = float('nan')
    mat_err_fro: float = float('nan')
    mat_err_op: float = float('nan')


class McTrajectory(TrajectoryBase):
    records: List[McRecord] = Field(default_factory=list)
    baseline: str = 'none'
    initial: Optional[np.ndarray] = None
    final: Optional[np.ndarray] = None


class BdRecord(Base):
    iteration: int
    loss: float
    dist: float = float('nan')
    rel_fro: float = float('nan')
    inc_a: float = float('nan')
    inc_b: float = float('nan')
    alpha: complex = complex('nan')


class BdTrajectory(TrajectoryBase):
    records: List[BdRecord] = Field(default_factory=list)
    initial_h: Optional[np.ndarray] = None
    initial_x: Optional[np.ndarray] = None
    final_h: Optional[np.ndarray] = None
    final_x: Optional[np.ndarray] = None
