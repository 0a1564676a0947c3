"""
Empirical restricted strong convexity and smoothness suites across seeds.
"""

import logging
from functools import partial
from typing import Any, Dict, List

import numpy as np

from estimators import alignment_convexity_check, bd_landscape_check, mc_landscape_check, pr_landscape_check
from models import AcceptanceCheck, ExperimentOutput, LandscapeReport, RngSeed
from utils.config import ExperimentConfig
from utils.ensembles import gen_blind_deconv, gen_matrix_completion, gen_phase_retrieval
from utils.trials import TrialOutcome, TrialPool

from . import Experiment, failure_check

logger = logging.getLogger(__name__)

SUITES = ['pr', 'mc', 'bd', 'alignment']


def _row(seed: RngSeed, suite: str, report: LandscapeReport) -> List[Any]:
    return [
        seed.stream_index,
        suite,
        report.probes,
        report.min_quadform,
        report.lower_threshold,
        report.max_quadform,
        report.upper_threshold,
        report.passed,
    ]


def landscape_trial(cfg: ExperimentConfig, trial: int, seed: RngSeed):
    """All four suites for one seed; instance and probe draws use separate streams."""
    base = seed.stream(2 * seed.stream_index)
    probes = seed.stream(2 * seed.stream_index + 1)
    n, K = cfg.n[0], cfg.K[0]
    m_pr = cfg.sample_counts([n])[0]
    m_bd = cfg.sample_counts([K])[0]

    reports = {
        'pr': pr_landscape_check(gen_phase_retrieval(n, m_pr, base), probes),
        'mc': mc_landscape_check(gen_matrix_completion(n, cfg.r, cfg.p[0], 0.0, base), probes),
        'bd': bd_landscape_check(gen_blind_deconv(K, m_bd, base), probes),
        'alignment': alignment_convexity_check(probes),
    }
    return TrialOutcome(
        success=all(report.passed for report in reports.values()),
        metrics={f"{suite}_passed": float(report.passed) for suite, report in reports.items()},
        rows=[_row(seed, suite, reports[suite]) for suite in SUITES],
    )


class Landscape(Experiment):
    """Hessian quadratic-form extremes against the curvature thresholds."""

    name = 'landscape'
    header = ['seed', 'suite', 'probes', 'min_quadform', 'lower_threshold', 'max_quadform', 'upper_threshold', 'passed']

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        return {
            'n': [200] if full_scale else [100],
            'oversampling': 10.0,
            'K': [50],
            'r': 5,
            'p': [0.3],
            'trials': 3,
        }

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        base = RngSeed(master_seed=cfg.master_seed)
        seeds = [base.stream(i) for i in range(cfg.trials)]
        results = await pool.run_trials(partial(landscape_trial, cfg), seeds)
        rows: List[List[Any]] = []
        for result in results:
            rows.extend(result.rows)

        finished = [r for r in results if r.error is None]
        checks = []
        for suite in SUITES:
            passed = [r.metrics[f"{suite}_passed"] for r in finished]
            checks.append(
                AcceptanceCheck(
                    name=f"{suite} suite passes on every seed",
                    passed=bool(passed) and bool(np.all(passed)),
                    detail=f"{int(sum(passed))}/{len(results)} seeds",
                )
            )
        checks.append(failure_check('no failed trials', results))
        logger.info(f"Landscape suites: {sum(1 for c in checks if c.passed)}/{len(checks)} checks passed")
        return self.output(rows, checks, results)


async def setup(runner):
    """Setup the landscape experiment."""
    await runner.add_experiment(Landscape(runner))
