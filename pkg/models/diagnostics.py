"""
Leave-one-out and landscape diagnostic records.
"""

from typing import Any, Dict, List, Literal

import numpy as np
from pydantic import Field

from .base import Base

Problem = Literal['pr', 'mc', 'bd']


class LooTrajectory(Base):
    """Proximity of one leave-one-out run to its paired true run."""

    problem: Problem
    index: int  # held-out sample (PR, BD) or row/column (MC)
    iterations: List[int]
    gaps: List[float]
    # Incoherence of the leave-one-out iterate with respect to the held-out design
    held_out: List[float]

    @property
    def initial_gap(self) -> float:
        return self.gaps[0]


class LooReport(Base):
    """Per-index and max-over-index gap curves on a common record grid."""

    problem: Problem
    indices: List[int]
    iterations: List[int]
    gaps: np.ndarray  # len(indices) x len(iterations)
    held_out: np.ndarray
    max_gap: np.ndarray
    argmax_l: List[int]
    max_held_out: np.ndarray

    header: List[str] = Field(
        default_factory=lambda: ['problem', 'l', 'iter', 'gap', 'held_out_incoherence']
    )

    def to_rows(self) -> List[List[Any]]:
        """CSV rows: one per (index, record) plus the max-over-index curve tagged ``l = max``."""
        rows: List[List[Any]] = []
        for i, index in enumerate(self.indices):
            for j, t in enumerate(self.iterations):
                rows.append([self.problem, index, t, self.gaps[i, j], self.held_out[i, j]])
        for j, t in enumerate(self.iterations):
            rows.append([self.problem, 'max', t, self.max_gap[j], self.max_held_out[j]])
        return rows


class LandscapeReport(Base):
    """Extremes of a Hessian quadratic form over random probes, against thresholds."""

    problem: Problem
    probes: int
    min_quadform: float
    max_quadform: float
    lower_threshold: float
    upper_threshold: float
    passed: bool
    details: Dict[str, float] = Field(default_factory=dict)
