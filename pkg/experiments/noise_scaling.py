"""
Statistical accuracy of vanilla gradient descent for noisy matrix completion.

Squared relative errors are averaged over trials on the raw scale and then
converted to dB. All noise levels reuse the same trial seeds, so the mask and
the noise direction are shared across the grid.
"""

import logging
from functools import partial
from typing import Any, Dict, List

import numpy as np

from estimators import mc_run, mc_snr
from models import AcceptanceCheck, ExperimentOutput, McConfig, RngSeed
from utils.config import ExperimentConfig
from utils.ensembles import gen_matrix_completion
from utils.helpers import to_db
from utils.trials import TrialOutcome, TrialPool

from . import Experiment, failure_check, grid_seeds, solver_config

logger = logging.getLogger(__name__)

METRICS = ['err_fro', 'err_op', 'err_2inf', 'err_entrywise']
SLOPE_TOLERANCE = 0.15
SNR_APPROX_TOLERANCE = 0.1


def sigma_for_snr_db(n: int, frobenius_sq: float, snr_db: float) -> float:
    """Noise level whose approximate SNR ``||M*||_F^2 / (n^2 σ^2)`` equals ``snr_db``."""
    return float(np.sqrt(frobenius_sq / (n**2 * 10.0 ** (snr_db / 10.0))))


def noise_trial(sigma: float, cfg: ExperimentConfig, trial: int, seed: RngSeed):
    n = cfg.n[0]
    inst = gen_matrix_completion(n, cfg.r, cfg.p[0], sigma, seed)
    trajectory = mc_run(inst, solver_config(McConfig, cfg, record_every=cfg.max_iters))
    final = trajectory.records[-1]
    metrics = {metric: getattr(final, metric) ** 2 for metric in METRICS}
    metrics['snr'] = mc_snr(inst)
    if sigma > 0.0:
        metrics['snr_approx'] = float(np.sum(inst.truth_matrix**2)) / (n**2 * sigma**2)
    return TrialOutcome(success=True, iterations=trajectory.iterations, metrics=metrics)


class NoiseScaling(Experiment):
    """Squared relative errors vs SNR (dB) at a fixed sampling rate."""

    name = 'noise_scaling'
    header = ['sigma', 'snr_db', 'metric', 'sq_err_db']

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        n, r = 500, 10
        snr_grid = np.linspace(40.0, 90.0, 11) if full_scale else np.linspace(40.0, 80.0, 5)
        return {
            'problem': 'mc',
            'n': [n],
            'r': r,
            'p': [0.1],
            # Unit spectrum, so ||M*||_F^2 = r
            'sigma': [sigma_for_snr_db(n, float(r), db) for db in snr_grid],
            'eta': 0.2,
            'max_iters': 1500,
            'tol_rel': 0.0,
            'trials': 20 if full_scale else 5,
        }

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        seeds = grid_seeds(cfg, 0)
        rows: List[List[Any]] = []
        all_results = []
        fit_x: List[float] = []
        fit_y: Dict[str, List[float]] = {metric: [] for metric in METRICS}
        approx_gaps: List[float] = []

        for sigma in cfg.sigma:
            results = await pool.run_trials(partial(noise_trial, sigma, cfg), seeds)
            all_results.extend(results)
            finished = [r for r in results if r.error is None]
            if not finished:
                logger.warning(f"Noise scaling sigma={sigma:.3e}: every trial failed")
                continue
            snr = float(np.mean([r.metrics['snr'] for r in finished]))
            snr_db = to_db(snr) if np.isfinite(snr) else float('inf')
            if sigma > 0.0:
                approx = float(np.mean([r.metrics['snr_approx'] for r in finished]))
                approx_gaps.append(abs(snr / approx - 1.0))
            for metric in METRICS:
                sq_err_db = to_db(float(np.mean([r.metrics[metric] for r in finished])))
                rows.append([sigma, snr_db, metric, sq_err_db])
                if np.isfinite(snr_db) and np.isfinite(sq_err_db):
                    fit_y[metric].append(sq_err_db)
            if np.isfinite(snr_db):
                fit_x.append(snr_db)
            logger.info(f"Noise scaling sigma={sigma:.3e}: SNR {snr_db:.1f} dB over {len(finished)} trials")

        checks: List[AcceptanceCheck] = []
        for metric in METRICS:
            if len(fit_x) < 2 or len(fit_y[metric]) != len(fit_x):
                checks.append(AcceptanceCheck(name=f"{metric}: slope -1", passed=False, detail='too few grid points'))
                continue
            slope = float(np.polyfit(fit_x, fit_y[metric], 1)[0])
            checks.append(
                AcceptanceCheck(
                    name=f"{metric}: slope -1 ± {SLOPE_TOLERANCE:g}",
                    passed=abs(slope + 1.0) <= SLOPE_TOLERANCE,
                    detail=f"slope {slope:.4f}",
                )
            )
        worst_gap = max(approx_gaps, default=0.0)
        checks.append(
            AcceptanceCheck(
                name=f"SNR within {SNR_APPROX_TOLERANCE:.0%} of ||M*||_F^2 / (n^2 σ^2)",
                passed=worst_gap <= SNR_APPROX_TOLERANCE,
                detail=f"max relative gap {worst_gap:.4f}",
            )
        )
        checks.append(failure_check('no failed trials', all_results))
        return self.output(rows, checks, all_results)


async def setup(runner):
    """Setup the noise scaling experiment."""
    await runner.add_experiment(NoiseScaling(runner))
