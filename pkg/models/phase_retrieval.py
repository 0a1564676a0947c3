"""
Phase retrieval problem instance.
"""

from typing import Optional

import numpy as np
from pydantic import field_validator, model_validator

from .base import Base, readonly


class PhaseRetrievalInstance(Base):
    """Real Gaussian designs ``a_j`` (rows of ``designs``) and quadratic measurements ``y_j``."""

    designs: np.ndarray  # m x n
    measurements: np.ndarray  # m
    truth: Optional[np.ndarray] = None  # unit-norm x*
    # Count used in the 1/m normalization; only leave-one-out instances differ from m
    norm_count: Optional[int] = None

    @field_validator('designs', 'measurements', 'truth')
    @classmethod
    def _frozen_copy(cls, value):
        return readonly(value)

    @model_validator(mode='after')
    def _check_shapes(self) -> 'PhaseRetrievalInstance':
        if self.designs.ndim != 2:
            raise ValueError('designs must be an m x n matrix')
        if self.measurements.shape != (self.designs.shape[0],):
            raise ValueError('measurements must have one entry per design vector')
        if self.truth is not None and self.truth.shape != (self.designs.shape[1],):
            raise ValueError('truth must have length n')
        if self.norm_count is not None and self.norm_count < 1:
            raise ValueError('norm_count must be positive')
        return self

    @property
    def n(self) -> int:
        return self.designs.shape[1]

    @property
    def m(self) -> int:
        return self.designs.shape[0]

    @property
    def scale(self) -> int:
        """The ``m`` in the ``1/m`` normalization of the loss."""
        return self.norm_count if self.norm_count is not None else self.m

    @property
    def has_truth(self) -> bool:
        return self.truth is not None

    def __repr__(self) -> str:
        return f"<PhaseRetrievalInstance(n={self.n}, m={self.m}, truth={self.has_truth})>"
