"""
Configuration management using Pydantic settings.
"""

import configparser
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from models.solver_config import STEP_RULE_ALIASES
from utils.errors import InvalidArgumentError

ExperimentName = Literal['convergence', 'phase_transition', 'incoherence', 'noise_scaling', 'landscape', 'loo']
ProblemName = Literal['pr', 'mc', 'bd']


class Config(BaseSettings):
    """Process-level runner settings, read from the environment or ``.env``."""

    model_config = SettingsConfigDict(env_file='.env', case_sensitive=False, extra='ignore')

    log_level: str = Field(default='INFO')
    workers: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    output_dir: str = Field(default='results')
    full_scale: bool = Field(default=False)


class ExperimentConfig(BaseModel):
    """One experiment invocation: problem sizes, grids, trial count and output location."""

    model_config = ConfigDict(extra='forbid')

    experiment: ExperimentName
    problem: ProblemName = 'pr'

    # Sizes and grids
    n: List[int] = Field(default_factory=lambda: [100], min_length=1)
    m: Optional[List[int]] = None  # defaults to oversampling * n (PR) or oversampling * K (BD)
    oversampling: float = Field(default=10.0, gt=0.0)
    K: List[int] = Field(default_factory=lambda: [100], min_length=1)
    r: int = Field(default=10, ge=1)
    p: List[float] = Field(default_factory=lambda: [0.1], min_length=1)
    sigma: List[float] = Field(default_factory=lambda: [0.0], min_length=1)

    # Solver settings (None means the problem's default)
    eta: Optional[float] = Field(default=None, ge=0.0)
    max_iters: Optional[int] = Field(default=None, ge=1)
    tol_rel: float = Field(default=1e-5, ge=0.0)
    record_every: int = Field(default=1, ge=1)
    step_rule: Optional[Literal['constant', 'log_scaled']] = None  # phase retrieval only

    # Monte Carlo settings
    trials: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)
    loo_indices: int = Field(default=10, ge=1)
    full_scale: bool = False

    output_path: str = 'results/output.csv'

    @field_validator('step_rule', mode='before')
    @classmethod
    def _step_rule_alias(cls, value):
        if isinstance(value, str):
            value = value.strip().lower()
            return STEP_RULE_ALIASES.get(value, value)
        return value

    @field_validator('n', 'K')
    @classmethod
    def _positive_sizes(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError('dimensions must be positive')
        return values

    @field_validator('m')
    @classmethod
    def _positive_samples(cls, values: Optional[List[int]]) -> Optional[List[int]]:
        if values is not None and (not values or any(v < 1 for v in values)):
            raise ValueError('sample counts must be a nonempty list of positive integers')
        return values

    @field_validator('p')
    @classmethod
    def _valid_rates(cls, values: List[float]) -> List[float]:
        if any(not 0.0 < v <= 1.0 for v in values):
            raise ValueError('sampling rates must lie in (0, 1]')
        return values

    @field_validator('sigma')
    @classmethod
    def _valid_noise(cls, values: List[float]) -> List[float]:
        if any(v < 0.0 for v in values):
            raise ValueError('noise levels must be nonnegative')
        return values

    def sample_counts(self, dims: List[int]) -> List[int]:
        """Sample count per dimension: explicit ``m`` or the oversampled default."""
        if self.m is not None:
            if len(self.m) == len(dims):
                return list(self.m)
            return [self.m[0]] * len(dims)
        return [int(round(self.oversampling * d)) for d in dims]


# Fields given as comma-separated lists in config files
_LIST_FIELDS = {'n', 'm', 'K', 'p', 'sigma'}


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse flat ``key = value`` text with ``[section]`` headers into one dict.

    Section headers group keys for readability only; keys must be unique
    across sections.
    """
    parser = configparser.ConfigParser(interpolation=None)
    # Keys are case sensitive (K vs k)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise InvalidArgumentError(f"Malformed config file: {e}") from e

    values: Dict[str, Any] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in values:
                raise InvalidArgumentError(f"Key '{key}' appears in more than one section")
            if key in _LIST_FIELDS:
                values[key] = [item.strip() for item in raw.split(',') if item.strip()]
            else:
                values[key] = raw.strip()
    return values


def load_experiment_config(path: Optional[Path]) -> Dict[str, Any]:
    """Read a config file into raw values (empty when no path is given)."""
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Config file not found: {path}")
    return parse_config_text(path.read_text())


def resolve_experiment_config(
    experiment: str,
    settings: Config,
    defaults: Mapping[str, Any],
    file_values: Mapping[str, Any],
    overrides: Mapping[str, Any],
) -> ExperimentConfig:
    """Merge settings < experiment defaults < config file < CLI overrides and validate."""
    merged: Dict[str, Any] = {
        'master_seed': settings.master_seed,
        'workers': settings.workers,
        'full_scale': settings.full_scale,
        'output_path': str(Path(settings.output_dir) / f"{experiment}.csv"),
    }
    merged.update(defaults)
    merged.update(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    merged['experiment'] = experiment
    try:
        return ExperimentConfig(**merged)
    except ValueError as e:
        raise InvalidArgumentError(f"Invalid configuration for '{experiment}': {e}") from e
