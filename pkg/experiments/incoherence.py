"""
Incoherence of the phase retrieval iterates with the design vectors.
"""

import logging
import math
from functools import partial
from typing import Any, Dict, List

from estimators import pr_run
from models import AcceptanceCheck, ExperimentOutput, PrConfig, RngSeed
from utils.config import ExperimentConfig
from utils.ensembles import gen_phase_retrieval
from utils.trials import TrialOutcome, TrialPool

from . import Experiment, failure_check, grid_seeds, solver_config

logger = logging.getLogger(__name__)

INCOHERENCE_CAP = 3.0


def incoherence_trial(n: int, m: int, cfg: ExperimentConfig, trial: int, seed: RngSeed):
    trajectory = pr_run(gen_phase_retrieval(n, m, seed), solver_config(PrConfig, cfg))
    rows = [
        [r.iteration, n, seed.stream_index, r.incoherence_diff, r.incoherence_raw] for r in trajectory.records
    ]
    later = [r.incoherence_diff for r in trajectory.records if r.iteration > 1]
    first = trajectory.records[0]
    return TrialOutcome(
        success=all(v <= INCOHERENCE_CAP for v in later),
        iterations=trajectory.iterations,
        metrics={
            'max_incoherence_diff': max(later, default=0.0),
            'initial_finite': float(math.isfinite(first.incoherence_diff) and math.isfinite(first.incoherence_raw)),
        },
        rows=rows,
    )


class Incoherence(Experiment):
    """``max_j |a_j^T (x^t - x*)|`` and ``max_j |a_j^T x^t|`` over ``sqrt(log n) ||x*||`` along the run."""

    name = 'incoherence'
    header = ['iter', 'n', 'seed', 'incoherence_diff', 'incoherence_raw']

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        return {
            'problem': 'pr',
            'n': [20, 100, 200, 1000] if full_scale else [20, 100, 200],
            'oversampling': 10.0,
            'eta': 0.1,
            'max_iters': 1000,
            'tol_rel': 1e-5,
            'trials': 1,
        }

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        rows: List[List[Any]] = []
        checks: List[AcceptanceCheck] = []
        all_results = []
        for point, (n, m) in enumerate(zip(cfg.n, cfg.sample_counts(cfg.n))):
            results = await pool.run_trials(partial(incoherence_trial, n, m, cfg), grid_seeds(cfg, point))
            all_results.extend(results)
            for result in results:
                rows.extend(result.rows)

            finished = [r for r in results if r.error is None]
            worst = max((r.metrics['max_incoherence_diff'] for r in finished), default=float('nan'))
            logger.info(f"Incoherence n={n}: worst incoherence_diff for t > 1 is {worst:.3f}")
            checks.append(
                AcceptanceCheck(
                    name=f"n={n}: incoherence_diff <= {INCOHERENCE_CAP:g} for t > 1",
                    passed=bool(finished) and all(r.success for r in finished),
                    detail=f"max {worst:.4g}",
                )
            )
            checks.append(
                AcceptanceCheck(
                    name=f"n={n}: incoherence measures finite at t = 0",
                    passed=bool(finished) and all(r.metrics['initial_finite'] == 1.0 for r in finished),
                )
            )
        checks.append(failure_check('no failed trials', all_results))
        return self.output(rows, checks, all_results)


async def setup(runner):
    """Setup the incoherence experiment."""
    await runner.add_experiment(Incoherence(runner))
