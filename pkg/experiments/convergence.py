"""
Error-vs-iteration curves of the three solvers with constant step sizes.
"""

import logging
from functools import partial
from typing import Any, Dict, List, Sequence

from estimators import bd_run, mc_run, pr_run
from models import AcceptanceCheck, BdConfig, ExperimentOutput, McConfig, PrConfig, RngSeed
from utils.config import ExperimentConfig
from utils.ensembles import gen_blind_deconv, gen_matrix_completion, gen_phase_retrieval
from utils.trials import TrialOutcome, TrialPool

from . import Experiment, failure_check, grid_seeds, required_successes, solver_config

logger = logging.getLogger(__name__)

SUCCESS_LEVEL = 1e-5
# Iteration by which every tracked metric must reach SUCCESS_LEVEL
ITERATION_BUDGET = {'pr': 200, 'mc': 500, 'bd': 200}
METRICS = {
    'pr': ['rel_dist'],
    'mc': ['mat_err_fro', 'mat_err_op', 'err_entrywise'],
    'bd': ['rel_fro'],
}


def _curve_rows(problem: str, size: int, seed: RngSeed, trajectory) -> List[List[Any]]:
    rows = []
    for record in trajectory.records:
        for metric in METRICS[problem]:
            rows.append([record.iteration, metric, getattr(record, metric), problem, size, seed.stream_index])
    return rows


def _reached_at(problem: str, trajectory) -> int:
    """First recorded iteration at which every metric is at or below SUCCESS_LEVEL (-1 if never)."""
    for record in trajectory.records:
        if all(getattr(record, metric) <= SUCCESS_LEVEL for metric in METRICS[problem]):
            return record.iteration
    return -1


def convergence_trial(problem: str, size: int, samples: int, cfg: ExperimentConfig, trial: int, seed: RngSeed):
    if problem == 'pr':
        inst = gen_phase_retrieval(size, samples, seed)
        trajectory = pr_run(inst, solver_config(PrConfig, cfg))
    elif problem == 'mc':
        inst = gen_matrix_completion(size, cfg.r, cfg.p[0], cfg.sigma[0], seed)
        trajectory = mc_run(inst, solver_config(McConfig, cfg))
    else:
        inst = gen_blind_deconv(size, samples, seed)
        trajectory = bd_run(inst, solver_config(BdConfig, cfg))

    reached = _reached_at(problem, trajectory)
    success = 0 <= reached <= ITERATION_BUDGET[problem]
    return TrialOutcome(
        success=success,
        iterations=trajectory.iterations,
        metrics={'reached_at': float(reached)},
        rows=_curve_rows(problem, size, seed, trajectory),
    )


class Convergence(Experiment):
    """Relative error curves for phase retrieval, matrix completion and blind deconvolution."""

    name = 'convergence'
    header = ['iter', 'metric', 'value', 'problem', 'size', 'seed']

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        # Solvers run past SUCCESS_LEVEL so the curves show the linear rate
        common = {'tol_rel': 1e-10, 'max_iters': 1000, 'record_every': 1}
        if problem == 'pr':
            return {**common, 'n': [20, 100], 'oversampling': 10.0, 'eta': 0.1, 'trials': 20 if full_scale else 5}
        if problem == 'mc':
            return {
                **common,
                'n': [1000] if full_scale else [500],
                'r': 10,
                'p': [0.1],
                'sigma': [0.0],
                'eta': 0.2,
                'max_iters': 800,
                'trials': 10 if full_scale else 3,
            }
        return {**common, 'K': [20, 100], 'oversampling': 10.0, 'eta': 0.5, 'trials': 20 if full_scale else 5}

    def _sizes(self, cfg: ExperimentConfig) -> Sequence[int]:
        if cfg.problem == 'bd':
            return cfg.K
        return cfg.n

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        sizes = list(self._sizes(cfg))
        samples = cfg.sample_counts(sizes)
        rows: List[List[Any]] = []
        checks: List[AcceptanceCheck] = []
        all_results = []
        for point, (size, m) in enumerate(zip(sizes, samples)):
            logger.info(f"Convergence {cfg.problem}: size={size}, samples={m}, {cfg.trials} trials")
            fn = partial(convergence_trial, cfg.problem, size, m, cfg)
            results = await pool.run_trials(fn, grid_seeds(cfg, point))
            all_results.extend(results)
            for result in results:
                rows.extend(result.rows)

            successes = sum(1 for r in results if r.success)
            needed = required_successes(cfg.trials)
            checks.append(
                AcceptanceCheck(
                    name=f"{cfg.problem} size={size}: error <= {SUCCESS_LEVEL:g} by iteration "
                    f"{ITERATION_BUDGET[cfg.problem]}",
                    passed=successes >= needed,
                    detail=f"{successes}/{cfg.trials} seeds (need {needed})",
                )
            )
        checks.append(failure_check('no failed trials', all_results))
        return self.output(rows, checks, all_results)


async def setup(runner):
    """Setup the convergence experiment."""
    await runner.add_experiment(Convergence(runner))
