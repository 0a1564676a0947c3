"""
Experiment extensions for the runner.

Each module in this package defines one ``Experiment`` subclass and an
``async def setup(runner)`` hook that registers an instance with the runner.
"""

import math
from typing import TYPE_CHECKING, Any, Dict, List, Sequence

from models import AcceptanceCheck, ExperimentOutput, RngSeed, TrialResult
from utils.config import ExperimentConfig
from utils.trials import TrialPool

if TYPE_CHECKING:
    from runner import ExperimentRunner


class Experiment:
    """Base class for runner experiments."""

    name: str = ''
    header: List[str] = []

    def __init__(self, runner: 'ExperimentRunner'):
        self.runner = runner

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        """Config values used when neither the config file nor the CLI sets them."""
        return {}

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        raise NotImplementedError

    def output(
        self,
        rows: List[List[Any]],
        checks: List[AcceptanceCheck],
        trials: Sequence[TrialResult] = (),
        header: Sequence[str] = (),
    ) -> ExperimentOutput:
        return ExperimentOutput(
            experiment=self.name,
            header=list(header or self.header),
            rows=rows,
            checks=checks,
            trials=list(trials),
        )


def grid_seeds(cfg: ExperimentConfig, point: int) -> List[RngSeed]:
    """Seeds of the ``cfg.trials`` trials at grid point ``point`` (stream ``point * trials + i``)."""
    base = RngSeed(master_seed=cfg.master_seed)
    return [base.stream(point * cfg.trials + i) for i in range(cfg.trials)]


def required_successes(trials: int, fraction: float = 0.9) -> int:
    return math.floor(fraction * trials)


def failure_check(name: str, results: Sequence[TrialResult]) -> AcceptanceCheck:
    """Passes when no trial ended in an estimation error."""
    errors = [r for r in results if r.error is not None]
    detail = f"{len(errors)} of {len(results)} trials failed"
    if errors:
        detail += f"; first: {errors[0].error}"
    return AcceptanceCheck(name=name, passed=not errors, detail=detail)


def solver_config(config_cls, cfg: ExperimentConfig, **extra):
    """Solver config from the experiment's step, budget and tolerance; unset values keep the solver defaults."""
    values = {
        'eta': cfg.eta,
        'max_iters': cfg.max_iters,
        'tol_rel': cfg.tol_rel,
        'record_every': cfg.record_every,
    }
    if 'step_rule' in config_cls.model_fields:
        values['step_rule'] = cfg.step_rule
    values.update(extra)
    return config_cls(**{k: v for k, v in values.items() if v is not None})
