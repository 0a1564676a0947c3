"""
Leave-one-out trajectories and their proximity to the true runs.

Each ``*_loo_run`` reruns gradient descent with sample (or row/column) ``l``
removed, on the same record grid as a reference run, and reports the gap
between the two trajectories under the problem's ambiguity-aware alignment.
These are diagnostics only; the solvers never consult them.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from models import (
    BdConfig,
    BdTrajectory,
    BlindDeconvInstance,
    LooReport,
    LooTrajectory,
    MatrixCompletionInstance,
    McConfig,
    McTrajectory,
    PhaseRetrievalInstance,
    PrConfig,
    PrTrajectory,
)
from utils.errors import InvalidArgumentError, NumericFailureError
from utils.numlin import procrustes_align, scalar_align

from .blind_deconvolution import bd_run, bd_spectral_init
from .matrix_completion import mc_run, mc_spectral_from_matrix, project_l, project_omega_minus_l
from .phase_retrieval import Preprocessing, log_factor, pr_run, pr_spectral_init

logger = logging.getLogger(__name__)


def _check_sample(total: int, l: int, what: str = 'sample') -> None:
    if not 0 <= l < total:
        raise InvalidArgumentError(f"Left-out {what} {l} out of range [0, {total})")


def _check_grid(reference_iterations: Sequence[int], iterations: Sequence[int]) -> None:
    if list(reference_iterations) != list(iterations):
        raise NumericFailureError("Leave-one-out record grid differs from the reference run")


# --- Phase retrieval -------------------------------------------------------


def pr_loo_instance(inst: PhaseRetrievalInstance, l: int) -> PhaseRetrievalInstance:
    """Instance without sample ``l``, keeping the ``1/m`` normalization of the full loss."""
    _check_sample(inst.m, l)
    if inst.m < 2:
        raise InvalidArgumentError("Leaving out the only sample leaves an empty loss")
    keep = np.arange(inst.m) != l
    return PhaseRetrievalInstance(
        designs=inst.designs[keep].copy(),
        measurements=inst.measurements[keep].copy(),
        truth=None if inst.truth is None else inst.truth.copy(),
        norm_count=inst.scale,
    )


def pr_aligned_init(inst: PhaseRetrievalInstance, preprocessing: Preprocessing = 'optimal') -> np.ndarray:
    """Spectral initialization with the sign of the eigenvector chosen closest to ``x*``."""
    if not inst.has_truth:
        raise InvalidArgumentError("Sign-aligned initialization needs the ground truth")
    x0 = pr_spectral_init(inst, preprocessing)
    direction = x0 / np.linalg.norm(x0)
    if np.linalg.norm(direction - inst.truth) > np.linalg.norm(direction + inst.truth):
        x0 = -x0
    return x0


def pr_reference_run(inst: PhaseRetrievalInstance, config: PrConfig) -> PrTrajectory:
    """True run from the sign-aligned initialization, keeping recorded iterates."""
    x0 = pr_aligned_init(inst, config.init_preprocessing)
    return pr_run(inst, config.model_copy(update={'keep_iterates': True}), x0=x0)


def pr_loo_run(
    inst: PhaseRetrievalInstance,
    config: PrConfig,
    l: int,
    reference: Optional[PrTrajectory] = None,
) -> LooTrajectory:
    """Gap ``||x^t - x^{t,(l)}||`` and held-out incoherence ``|a_l^T(x^{t,(l)} - x*)| / (sqrt(log n)||x*||)``."""
    _check_sample(inst.m, l)
    loo_inst = pr_loo_instance(inst, l)
    if reference is None:
        reference = pr_reference_run(inst, config)
    loo_config = config.model_copy(
        update={
            'eta': reference.eta,
            'step_rule': 'constant',
            'max_iters': reference.iterations,
            'tol_rel': 0.0,
            'grad_tol': 0.0,
            'keep_iterates': True,
        }
    )
    loo = pr_run(loo_inst, loo_config, x0=pr_aligned_init(loo_inst, config.init_preprocessing))
    _check_grid(reference.recorded_iterations, loo.recorded_iterations)

    a_l = inst.designs[l]
    denom = log_factor(inst.n) * float(np.linalg.norm(inst.truth))
    gaps = [float(np.linalg.norm(x - x_loo)) for x, x_loo in zip(reference.iterates, loo.iterates)]
    held_out = [abs(float(a_l @ (x_loo - inst.truth))) / denom for x_loo in loo.iterates]
    logger.debug(f"PR leave-one-out l={l}: max gap {max(gaps):.3e}")
    return LooTrajectory(problem='pr', index=l, iterations=loo.recorded_iterations, gaps=gaps, held_out=held_out)


# --- Matrix completion -----------------------------------------------------


def _require_truth(inst: MatrixCompletionInstance) -> None:
    if inst.truth_matrix is None or inst.truth_factor is None:
        raise InvalidArgumentError("Matrix completion leave-one-out needs the ground truth")


def mc_loo_matrix(inst: MatrixCompletionInstance, l: int) -> np.ndarray:
    """``M^{(l)} = P_{Ω^{-l}}(Y)/p + P_l(M*)``."""
    _require_truth(inst)
    _check_sample(inst.n, l, 'row/column')
    return project_omega_minus_l(inst, inst.observed, l) / inst.p + project_l(inst.truth_matrix, l)


def _line_residual_gradient(inst: MatrixCompletionInstance, X: np.ndarray, l: int) -> np.ndarray:
    """``P_l(X X^T - M*) X``."""
    v = X @ X[l] - inst.truth_matrix[:, l]
    G = np.outer(v, X[l])
    G[l] = v @ X
    return G


def mc_loo_loss(inst: MatrixCompletionInstance, X: np.ndarray, l: int) -> float:
    """``(1/4p)||P_{Ω^{-l}}(X X^T - Y)||_F^2 + (1/4)||P_l(X X^T - M*)||_F^2``."""
    _require_truth(inst)
    _check_sample(inst.n, l, 'row/column')
    keep = (inst.omega_rows != l) & (inst.omega_cols != l)
    rows, cols = inst.omega_rows[keep], inst.omega_cols[keep]
    residual = np.einsum('ij,ij->i', X[rows], X[cols]) - inst.observed[rows, cols]
    v = X @ X[l] - inst.truth_matrix[:, l]
    line = 2.0 * float(v @ v) - v[l] ** 2
    return float(residual @ residual) / (4.0 * inst.p) + line / 4.0


def mc_loo_gradient(inst: MatrixCompletionInstance, X: np.ndarray, l: int) -> np.ndarray:
    """``(1/p) P_{Ω^{-l}}(X X^T - Y) X + P_l(X X^T - M*) X``."""
    _require_truth(inst)
    _check_sample(inst.n, l, 'row/column')
    keep = (inst.omega_rows != l) & (inst.omega_cols != l)
    rows, cols = inst.omega_rows[keep], inst.omega_cols[keep]
    residual = np.einsum('ij,ij->i', X[rows], X[cols]) - inst.observed[rows, cols]
    operator = sparse.csr_matrix((residual, (rows, cols)), shape=(inst.n, inst.n))
    return (operator @ X) / inst.p + _line_residual_gradient(inst, X, l)


def mc_reference_run(inst: MatrixCompletionInstance, config: McConfig) -> McTrajectory:
    return mc_run(inst, config.model_copy(update={'keep_iterates': True, 'baseline': 'none'}))


def mc_loo_run(
    inst: MatrixCompletionInstance,
    config: McConfig,
    l: int,
    reference: Optional[McTrajectory] = None,
) -> LooTrajectory:
    """Gap ``min_R ||X^t Ĥ^t - X^{t,(l)} R||_F`` and the row-``l`` error of the aligned LOO iterate."""
    _require_truth(inst)
    _check_sample(inst.n, l, 'row/column')
    if reference is None:
        reference = mc_reference_run(inst, config)
    record_at = set(reference.recorded_iterations)

    X = mc_spectral_from_matrix(mc_loo_matrix(inst, l), inst.r)
    iterates: List[np.ndarray] = []
    for t in range(reference.iterations + 1):
        if t in record_at:
            iterates.append(X.copy())
        if t == reference.iterations:
            break
        X = X - reference.eta * mc_loo_gradient(inst, X, l)
        if not np.all(np.isfinite(X)):
            raise NumericFailureError("Leave-one-out iterate became non-finite", iteration=t + 1)

    Xstar = inst.truth_factor
    gaps, held_out = [], []
    for X_true, X_loo in zip(reference.iterates, iterates):
        aligned_true = X_true @ procrustes_align(X_true, Xstar).rotation
        gaps.append(procrustes_align(X_loo, aligned_true).residual)
        aligned_loo = X_loo @ procrustes_align(X_loo, Xstar).rotation
        held_out.append(float(np.linalg.norm(aligned_loo[l] - Xstar[l])))
    logger.debug(f"MC leave-one-out l={l}: max gap {max(gaps):.3e}")
    return LooTrajectory(
        problem='mc', index=l, iterations=reference.recorded_iterations, gaps=gaps, held_out=held_out
    )


# --- Blind deconvolution ---------------------------------------------------


def bd_loo_instance(inst: BlindDeconvInstance, l: int) -> BlindDeconvInstance:
    _check_sample(inst.m, l)
    if inst.m < 2:
        raise InvalidArgumentError("Leaving out the only sample leaves an empty loss")
    keep = np.arange(inst.m) != l
    return BlindDeconvInstance(
        a_designs=inst.a_designs[keep].copy(),
        b_designs=inst.b_designs[keep].copy(),
        measurements=inst.measurements[keep].copy(),
        truth_h=None if inst.truth_h is None else inst.truth_h.copy(),
        truth_x=None if inst.truth_x is None else inst.truth_x.copy(),
    )


def bd_reference_run(inst: BlindDeconvInstance, config: BdConfig) -> BdTrajectory:
    return bd_run(inst, config.model_copy(update={'keep_iterates': True}))


def bd_loo_run(
    inst: BlindDeconvInstance,
    config: BdConfig,
    l: int,
    reference: Optional[BdTrajectory] = None,
) -> LooTrajectory:
    """Gap ``dist(z^{t,(l)}, z̃^t)`` to the aligned true iterate and the held-out ratio
    ``|a_l^H(x̃^{t,(l)} - x*)| / (sqrt(log m) ||x̃^{t,(l)} - x*||)``."""
    if not inst.has_truth:
        raise InvalidArgumentError("Blind deconvolution leave-one-out needs the ground truth")
    _check_sample(inst.m, l)
    loo_inst = bd_loo_instance(inst, l)
    if reference is None:
        reference = bd_reference_run(inst, config)
    loo_config = config.model_copy(
        update={'eta': reference.eta, 'max_iters': reference.iterations, 'tol_rel': 0.0, 'keep_iterates': True}
    )
    loo = bd_run(loo_inst, loo_config, initial=bd_spectral_init(loo_inst, config.init_refine_passes))
    _check_grid(reference.recorded_iterations, loo.recorded_iterations)

    K = inst.K
    hstar, xstar = inst.truth_h, inst.truth_x
    a_l = inst.a_designs[l]
    log_m = np.sqrt(np.log(inst.m)) if inst.m > 1 else 1.0
    gaps, held_out = [], []
    for z_true, z_loo in zip(reference.iterates, loo.iterates):
        h, x = z_true[:K], z_true[K:]
        alpha = scalar_align(h, x, hstar, xstar).alpha
        h_tilde, x_tilde = h / np.conj(alpha), alpha * x
        h_loo, x_loo = z_loo[:K], z_loo[K:]
        gaps.append(float(np.sqrt(scalar_align(h_loo, x_loo, h_tilde, x_tilde).objective)))

        alpha_loo = scalar_align(h_loo, x_loo, hstar, xstar).alpha
        err = alpha_loo * x_loo - xstar
        err_norm = float(np.linalg.norm(err))
        ratio = abs(np.vdot(a_l, err)) / (log_m * err_norm) if err_norm > 0.0 else 0.0
        held_out.append(float(ratio))
    logger.debug(f"BD leave-one-out l={l}: max gap {max(gaps):.3e}")
    return LooTrajectory(problem='bd', index=l, iterations=loo.recorded_iterations, gaps=gaps, held_out=held_out)


# --- Aggregation -----------------------------------------------------------


def loo_proximity_report(reference_iterations: Sequence[int], loo_trajs: Sequence[LooTrajectory]) -> LooReport:
    """Stack per-index gap curves and reduce to the max-over-index curve (first index wins ties)."""
    if not loo_trajs:
        raise InvalidArgumentError("No leave-one-out trajectories to aggregate")
    problems = {traj.problem for traj in loo_trajs}
    if len(problems) != 1:
        raise InvalidArgumentError(f"Mixed problems in one report: {sorted(problems)}")
    iterations = list(reference_iterations)
    for traj in loo_trajs:
        if list(traj.iterations) != iterations:
            raise InvalidArgumentError(f"Trajectory for index {traj.index} is on a different record grid")

    gaps = np.array([traj.gaps for traj in loo_trajs], dtype=float)
    held_out = np.array([traj.held_out for traj in loo_trajs], dtype=float)
    if np.any(gaps < 0.0):
        raise InvalidArgumentError("Gap metrics must be nonnegative")
    winners = np.argmax(gaps, axis=0)
    indices = [traj.index for traj in loo_trajs]
    return LooReport(
        problem=problems.pop(),
        indices=indices,
        iterations=iterations,
        gaps=gaps,
        held_out=held_out,
        max_gap=gaps.max(axis=0),
        argmax_l=[indices[i] for i in winners],
        max_held_out=held_out.max(axis=0),
    )
