"""
Success rate vs sampling rate for vanilla, projected and regularized gradient descent.

A trial succeeds when ``||X X^T - M*||_F / ||M*||_F <= 1e-5`` within the
iteration budget. A spectral initialization that fails counts as an
unsuccessful trial.
"""

import logging
from functools import partial
from typing import Any, Dict, List

from estimators import mc_run
from models import AcceptanceCheck, ExperimentOutput, McConfig, RngSeed
from utils.config import ExperimentConfig
from utils.ensembles import gen_matrix_completion
from utils.helpers import log_grid
from utils.trials import TrialOutcome, TrialPool

from . import Experiment, grid_seeds, solver_config

logger = logging.getLogger(__name__)

ALGORITHMS = {'vanilla': 'none', 'projected': 'projected', 'regularized': 'regularized'}


def phase_transition_trial(algorithm: str, p: float, cfg: ExperimentConfig, trial: int, seed: RngSeed):
    inst = gen_matrix_completion(cfg.n[0], cfg.r, p, cfg.sigma[0], seed)
    config = solver_config(
        McConfig, cfg, record_every=cfg.max_iters, stop_metric='mat_err_fro', baseline=ALGORITHMS[algorithm]
    )
    trajectory = mc_run(inst, config)
    return TrialOutcome(
        success=trajectory.converged,
        iterations=trajectory.iterations,
        metrics={'mat_err_fro': trajectory.records[-1].mat_err_fro},
    )


def midpoint(rates: List[float]) -> int:
    """First grid index with success rate at least one half (grid length if none)."""
    for i, rate in enumerate(rates):
        if rate >= 0.5:
            return i
    return len(rates)


def monotone_violations(rates: List[float]) -> int:
    return sum(1 for low, high in zip(rates, rates[1:]) if high < low)


class PhaseTransition(Experiment):
    """Matrix completion phase transition in the sampling rate."""

    name = 'phase_transition'
    header = ['p', 'algorithm', 'success_rate', 'trials']

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        return {
            'problem': 'mc',
            'n': [500],
            'r': 10,
            'p': log_grid(0.01, 0.1, 51 if full_scale else 11),
            'sigma': [0.0],
            'eta': 0.2,
            'max_iters': 10000,
            'tol_rel': 1e-5,
            'trials': 50 if full_scale else 10,
        }

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        grid = sorted(cfg.p)
        rows: List[List[Any]] = []
        rates: Dict[str, List[float]] = {name: [] for name in ALGORITHMS}
        all_results = []
        for point, p in enumerate(grid):
            # The three algorithms see the same instances at each p
            seeds = grid_seeds(cfg, point)
            for algorithm in ALGORITHMS:
                results = await pool.run_trials(partial(phase_transition_trial, algorithm, p, cfg), seeds)
                all_results.extend(results)
                rate = sum(1 for r in results if r.success) / len(results)
                rates[algorithm].append(rate)
                rows.append([p, algorithm, rate, len(results)])
                logger.info(f"Phase transition p={p:.4g} {algorithm}: success rate {rate:.2f}")

        vanilla, regularized = rates['vanilla'], rates['regularized']
        violations = monotone_violations(vanilla)
        gap = abs(midpoint(vanilla) - midpoint(regularized))
        checks = [
            AcceptanceCheck(
                name=f"vanilla success rate >= 0.9 at p={grid[-1]:.4g}",
                passed=vanilla[-1] >= 0.9,
                detail=f"rate {vanilla[-1]:.2f}",
            ),
            AcceptanceCheck(
                name=f"vanilla success rate <= 0.1 at p={grid[0]:.4g}",
                passed=vanilla[0] <= 0.1,
                detail=f"rate {vanilla[0]:.2f}",
            ),
            AcceptanceCheck(
                name='vanilla success rate nondecreasing in p (one violation allowed)',
                passed=violations <= 1,
                detail=f"{violations} violations",
            ),
            AcceptanceCheck(
                name='vanilla and regularized midpoints within 2 grid points',
                passed=gap <= 2,
                detail=f"midpoints {midpoint(vanilla)} and {midpoint(regularized)}",
            ),
        ]
        return self.output(rows, checks, all_results)


async def setup(runner):
    """Setup the phase transition experiment."""
    await runner.add_experiment(PhaseTransition(runner))
