"""
Solver configuration models.
"""

from typing import Literal, Optional

from pydantic import Field, field_validator

from .base import Base

STEP_RULE_ALIASES = {'theorem1': 'log_scaled', 'theorem-1': 'log_scaled'}


class PrConfig(Base):
    """Wirtinger flow settings (defaults follow the constant-step convergence runs)."""

    eta: float = Field(default=0.1, ge=0.0)
    max_iters: int = Field(default=1000, ge=0)
    tol_rel: float = Field(default=1e-5, ge=0.0)
    record_every: int = Field(default=1, ge=1)
    # 'theorem1' is accepted as another name for 'log_scaled'
    step_rule: Literal['constant', 'log_scaled'] = 'constant'
    c1: float = Field(default=0.1, gt=0.0)  # constant in eta = c1 / (log n * ||x0||^2)
    init_preprocessing: Literal['plain', 'optimal'] = 'optimal'
    grad_tol: float = Field(default=1e-10, ge=0.0)  # stopping rule when truth is absent
    keep_iterates: bool = False

    @field_validator('step_rule', mode='before')
    @classmethod
    def resolve_step_rule_alias(cls, value):
        if isinstance(value, str) and value.strip().lower() in STEP_RULE_ALIASES:
            return STEP_RULE_ALIASES[value.strip().lower()]
        return value


class McConfig(Base):
    """Vanilla gradient descent settings for matrix completion, plus the two baselines."""

    eta: float = Field(default=0.2, ge=0.0)
    max_iters: int = Field(default=1000, ge=0)
    tol_rel: float = Field(default=1e-5, ge=0.0)
    record_every: int = Field(default=1, ge=1)
    # err_fro: factor error modulo rotation; mat_err_fro: ||XX^T - M*||_F / ||M*||_F
    stop_metric: Literal['err_fro', 'mat_err_fro'] = 'err_fro'
    baseline: Literal['none', 'projected', 'regularized'] = 'none'
    projection_radius: Optional[float] = Field(default=None, gt=0.0)
    reg_lambda: float = Field(default=1.0, ge=0.0)
    reg_alpha: Optional[float] = Field(default=None, gt=0.0)
    keep_iterates: bool = False


class BdConfig(Base):
    """Scaled Wirtinger gradient descent settings for blind deconvolution."""

    eta: float = Field(default=0.5, ge=0.0)
    max_iters: int = Field(default=1000, ge=0)
    tol_rel: float = Field(default=1e-5, ge=0.0)
    record_every: int = Field(default=1, ge=1)
    init_refine_passes: int = Field(default=2, ge=0)  # alternating least-squares passes after the spectral step
    keep_iterates: bool = False
