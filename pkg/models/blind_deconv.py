"""
Blind deconvolution instance and solver state.
"""

from typing import Optional

import numpy as np
from pydantic import field_validator, model_validator

from .base import Base, readonly


class BlindDeconvInstance(Base):
    """Bilinear measurements ``y_j = b_j^H h* x*^H a_j``.

    Row ``j`` of ``a_designs`` is ``a_j`` and row ``j`` of ``b_designs`` is
    ``b_j`` (so the partial DFT matrix ``B`` with rows ``b_j^H`` is
    ``conj(b_designs)``).
    """

    a_designs: np.ndarray  # m x K complex
    b_designs: np.ndarray  # m x K complex
    measurements: np.ndarray  # m complex
    truth_h: Optional[np.ndarray] = None
    truth_x: Optional[np.ndarray] = None

    @field_validator('a_designs', 'b_designs', 'measurements', 'truth_h', 'truth_x')
    @classmethod
    def _frozen_copy(cls, value):
        return readonly(value)

    @model_validator(mode='after')
    def _check_shapes(self) -> 'BlindDeconvInstance':
        if self.a_designs.ndim != 2 or self.a_designs.shape != self.b_designs.shape:
            raise ValueError('a_designs and b_designs must both be m x K')
        if self.measurements.shape != (self.a_designs.shape[0],):
            raise ValueError('measurements must have one entry per sample')
        if (self.truth_h is None) != (self.truth_x is None):
            raise ValueError('truth must be given as a (h*, x*) pair')
        return self

    @property
    def K(self) -> int:
        return self.a_designs.shape[1]

    @property
    def m(self) -> int:
        return self.a_designs.shape[0]

    @property
    def B(self) -> np.ndarray:
        """Partial DFT matrix whose row ``j`` is ``b_j^H``."""
        return self.b_designs.conj()

    @property
    def has_truth(self) -> bool:
        return self.truth_h is not None

    def __repr__(self) -> str:
        return f"<BlindDeconvInstance(K={self.K}, m={self.m}, truth={self.has_truth})>"


class BdState(Base):
    """Iterate ``z = (h, x)``."""

    h: np.ndarray
    x: np.ndarray

    @model_validator(mode='after')
    def _check_state(self) -> 'BdState':
        if self.h.shape != self.x.shape:
            raise ValueError('h and x must have the same length')
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.x))):
            raise ValueError('state entries must be finite')
        if not (np.any(self.h) or np.any(self.x)):
            raise ValueError('h and x cannot both be zero')
        return self
