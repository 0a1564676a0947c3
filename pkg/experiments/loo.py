"""
Leave-one-out proximity diagnostics for one problem.

The reference run happens once in the runner process; the leave-one-out runs
for the selected indices are independent and go to the worker pool.
"""

import logging
from typing import Any, Dict, List

import numpy as np

from estimators import (
    bd_loo_run,
    bd_reference_run,
    loo_proximity_report,
    mc_loo_bound,
    mc_loo_run,
    mc_reference_run,
    pr_loo_run,
    pr_reference_run,
)
from models import AcceptanceCheck, BdConfig, ExperimentOutput, LooReport, McConfig, PrConfig, RngSeed
from utils.config import ExperimentConfig
from utils.ensembles import gen_blind_deconv, gen_matrix_completion, gen_phase_retrieval
from utils.errors import InvalidArgumentError
from utils.trials import TrialPool

from . import Experiment, solver_config

logger = logging.getLogger(__name__)

GAP_GROWTH_CAP = 10.0
PR_GAP_CONSTANT = 10.0
MC_GAP_CONSTANT = 10.0
PR_HELD_OUT_RATIO_CAP = 3.0
BD_HELD_OUT_CAP = 8.0


def _growth_check(report: LooReport) -> AcceptanceCheck:
    initial = float(report.max_gap[0])
    worst = float(report.max_gap.max())
    return AcceptanceCheck(
        name=f"max-over-l gap stays within {GAP_GROWTH_CAP:g}x its initial value",
        passed=worst <= GAP_GROWTH_CAP * initial,
        detail=f"initial {initial:.4g}, max {worst:.4g}",
    )


class LeaveOneOut(Experiment):
    """Per-index and max-over-index gap curves between true and leave-one-out runs."""

    name = 'loo'
    header = ['problem', 'l', 'iter', 'gap', 'held_out_incoherence']

    def defaults(self, problem: str, full_scale: bool) -> Dict[str, Any]:
        if problem == 'mc':
            return {'n': [300], 'r': 3, 'p': [0.3], 'sigma': [0.0], 'eta': 0.2, 'max_iters': 500, 'loo_indices': 5}
        if problem == 'bd':
            return {'K': [50], 'oversampling': 10.0, 'eta': 0.5, 'max_iters': 500, 'loo_indices': 10}
        return {'n': [100], 'oversampling': 10.0, 'eta': 0.1, 'max_iters': 1000, 'loo_indices': 10}

    async def run(self, cfg: ExperimentConfig, pool: TrialPool) -> ExperimentOutput:
        seed = RngSeed(master_seed=cfg.master_seed)
        if cfg.problem == 'pr':
            report, checks = await self._run_pr(cfg, pool, seed)
        elif cfg.problem == 'mc':
            report, checks = await self._run_mc(cfg, pool, seed)
        else:
            report, checks = await self._run_bd(cfg, pool, seed)
        checks.insert(0, _growth_check(report))
        logger.info(
            f"Leave-one-out {cfg.problem}: {len(report.indices)} indices, max gap {float(report.max_gap.max()):.3e}"
        )
        return self.output(report.to_rows(), checks, header=report.header)

    @staticmethod
    def _indices(cfg: ExperimentConfig, total: int) -> List[int]:
        if cfg.loo_indices > total:
            raise InvalidArgumentError(f"Asked for {cfg.loo_indices} leave-one-out indices out of {total}")
        return list(range(cfg.loo_indices))

    async def _run_pr(self, cfg: ExperimentConfig, pool: TrialPool, seed: RngSeed):
        n = cfg.n[0]
        inst = gen_phase_retrieval(n, cfg.sample_counts([n])[0], seed)
        config = solver_config(PrConfig, cfg)
        reference = pr_reference_run(inst, config)
        indices = self._indices(cfg, inst.m)
        count = len(indices)
        trajs = await pool.map(pr_loo_run, [inst] * count, [config] * count, indices, [reference] * count)
        report = loo_proximity_report(reference.recorded_iterations, trajs)

        bound = PR_GAP_CONSTANT * np.sqrt(np.log(n) / n) * float(np.linalg.norm(inst.truth))
        full = reference.column('incoherence_diff')
        # Average over t of held-out / full-trajectory incoherence, worst index
        ratios = np.mean(report.held_out / np.maximum(full, np.finfo(float).tiny), axis=1)
        checks = [
            AcceptanceCheck(
                name=f"max gap <= {PR_GAP_CONSTANT:g} sqrt(log n / n) ||x*||",
                passed=float(report.max_gap.max()) <= bound,
                detail=f"max {float(report.max_gap.max()):.4g}, bound {bound:.4g}",
            ),
            AcceptanceCheck(
                name=f"held-out incoherence over full incoherence <= {PR_HELD_OUT_RATIO_CAP:g} on average",
                passed=float(ratios.max()) <= PR_HELD_OUT_RATIO_CAP,
                detail=f"worst average ratio {float(ratios.max()):.4g}",
            ),
        ]
        return report, checks

    async def _run_mc(self, cfg: ExperimentConfig, pool: TrialPool, seed: RngSeed):
        inst = gen_matrix_completion(cfg.n[0], cfg.r, cfg.p[0], cfg.sigma[0], seed)
        config = solver_config(McConfig, cfg)
        reference = mc_reference_run(inst, config)
        indices = self._indices(cfg, inst.n)
        count = len(indices)
        trajs = await pool.map(mc_loo_run, [inst] * count, [config] * count, indices, [reference] * count)
        report = loo_proximity_report(reference.recorded_iterations, trajs)

        bound = MC_GAP_CONSTANT * mc_loo_bound(inst)
        checks = [
            AcceptanceCheck(
                name=f"max gap <= {MC_GAP_CONSTANT:g}x the row-norm-scaled bound",
                passed=float(report.max_gap.max()) <= bound,
                detail=f"max {float(report.max_gap.max()):.4g}, bound {bound:.4g}",
            )
        ]
        return report, checks

    async def _run_bd(self, cfg: ExperimentConfig, pool: TrialPool, seed: RngSeed):
        K = cfg.K[0]
        inst = gen_blind_deconv(K, cfg.sample_counts([K])[0], seed)
        config = solver_config(BdConfig, cfg)
        reference = bd_reference_run(inst, config)
        indices = self._indices(cfg, inst.m)
        count = len(indices)
        trajs = await pool.map(bd_loo_run, [inst] * count, [config] * count, indices, [reference] * count)
        report = loo_proximity_report(reference.recorded_iterations, trajs)

        worst = float(report.held_out.max())
        checks = [
            AcceptanceCheck(
                name=f"held-out incoherence |a_l^H(x - x*)| / (sqrt(log m) ||x - x*||) <= {BD_HELD_OUT_CAP:g}",
                passed=worst <= BD_HELD_OUT_CAP,
                detail=f"max {worst:.4g}",
            )
        ]
        return report, checks


async def setup(runner):
    """Setup the leave-one-out experiment."""
    await runner.add_experiment(LeaveOneOut(runner))
