"""
Result records returned by the shared numerical primitives.
"""

from typing import Literal

import numpy as np

from .base import Base


class EigResult(Base):
    """Top-r eigenpairs, values descending, vectors as orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray  # ||M v_i - lambda_i v_i||_2 per pair


class SvdTriple(Base):
    """Leading singular value with its unit left/right singular vectors."""

    sigma1: float
    left: np.ndarray
    right: np.ndarray
    converged: bool = True


class ProcrustesResult(Base):
    """Orthonormal H minimizing ||X H - X*||_F."""

    rotation: np.ndarray
    residual: float
    degenerate: bool = False
    singular_values: np.ndarray


class AlignmentSolution(Base):
    """Minimizer of the blind deconvolution alignment objective g."""

    alpha: complex
    objective: float
    converged: bool
    method: Literal['newton', 'grid-fallback'] = 'newton'
    iterations: int = 0
