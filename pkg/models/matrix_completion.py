"""
Symmetric low-rank matrix completion instance.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import Field, field_validator, model_validator

from .base import Base, readonly


class MatrixCompletionInstance(Base):
    """Symmetric Bernoulli mask Ω and observations Y = P_Ω(M* + E)."""

    r: int = Field(ge=1)
    p: float = Field(gt=0.0, le=1.0)
    sigma: float = Field(default=0.0, ge=0.0)
    mask: np.ndarray  # n x n bool, symmetric
    observed: np.ndarray  # n x n, zero off the mask
    noise: Optional[np.ndarray] = None  # realized E (full, symmetric)
    truth_factor: Optional[np.ndarray] = None  # X* (n x r)
    truth_matrix: Optional[np.ndarray] = None  # M* = X* X*^T
    spectrum: Optional[Tuple[float, ...]] = None
    # Coordinates of Ω (both triangles), row-major order
    omega_rows: np.ndarray
    omega_cols: np.ndarray

    @field_validator('mask', 'observed', 'noise', 'truth_factor', 'truth_matrix', 'omega_rows', 'omega_cols')
    @classmethod
    def _frozen_copy(cls, value):
        return readonly(value)

    @classmethod
    def from_arrays(
        cls,
        mask: np.ndarray,
        observed: np.ndarray,
        r: int,
        p: float,
        sigma: float = 0.0,
        noise: Optional[np.ndarray] = None,
        truth_factor: Optional[np.ndarray] = None,
        truth_matrix: Optional[np.ndarray] = None,
        spectrum: Optional[Tuple[float, ...]] = None,
    ) -> 'MatrixCompletionInstance':
        """Build an instance, deriving the Ω coordinate lists from ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        rows, cols = np.nonzero(mask)
        return cls(
            r=r,
            p=p,
            sigma=sigma,
            mask=mask,
            observed=np.asarray(observed, dtype=float),
            noise=noise,
            truth_factor=truth_factor,
            truth_matrix=truth_matrix,
            spectrum=spectrum,
            omega_rows=rows,
            omega_cols=cols,
        )

    @model_validator(mode='after')
    def _check_shapes(self) -> 'MatrixCompletionInstance':
        n = self.mask.shape[0]
        if self.mask.shape != (n, n) or self.observed.shape != (n, n):
            raise ValueError('mask and observed must be square and of equal size')
        if not np.array_equal(self.mask, self.mask.T):
            raise ValueError('mask must be symmetric')
        if self.r > n:
            raise ValueError('rank cannot exceed the dimension')
        if self.truth_factor is not None and self.truth_factor.shape != (n, self.r):
            raise ValueError('truth_factor must be n x r')
        if self.truth_matrix is not None and self.truth_matrix.shape != (n, n):
            raise ValueError('truth_matrix must be n x n')
        if self.omega_rows.shape != self.omega_cols.shape:
            raise ValueError('Ω coordinate arrays differ in length')
        return self

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def has_truth(self) -> bool:
        return self.truth_matrix is not None

    @property
    def observed_values(self) -> np.ndarray:
        """Y restricted to Ω, aligned with ``omega_rows``/``omega_cols``."""
        return self.observed[self.omega_rows, self.omega_cols]

    def __repr__(self) -> str:
        return f"<MatrixCompletionInstance(n={self.n}, r={self.r}, p={self.p}, sigma={self.sigma})>"
