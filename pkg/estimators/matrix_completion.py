"""
Vanilla gradient descent for symmetric low-rank matrix completion.

``f(X) = (1/4p) Σ_{(j,k)∈Ω} (e_j^T X X^T e_k - Y_jk)^2`` over both triangles
of the symmetric mask. Residuals are kept on Ω only and gradients go through
a sparse CSR product, so no dense n x n residual is formed per step.
"""

import logging
import time
from typing import Dict, Optional

import numpy as np
import scipy.linalg
from scipy import sparse

from models import MatrixCompletionInstance, McConfig, McRecord, McTrajectory
from utils.errors import InvalidArgumentError, NumericFailureError
from utils.numlin import procrustes_align, top_eigs_sym

logger = logging.getLogger(__name__)


# --- Projections -----------------------------------------------------------


def _check_square(inst: MatrixCompletionInstance, M: np.ndarray) -> np.ndarray:
    M = np.asarray(M)
    if M.shape != (inst.n, inst.n):
        raise InvalidArgumentError(f"Expected an {inst.n}x{inst.n} matrix, got shape {M.shape}")
    return M


def _check_index(n: int, l: int) -> None:
    if not 0 <= l < n:
        raise InvalidArgumentError(f"Index {l} out of range for dimension {n}")


def _line_mask(n: int, l: int) -> np.ndarray:
    line = np.zeros((n, n), dtype=bool)
    line[l, :] = True
    line[:, l] = True
    return line


def project_omega(inst: MatrixCompletionInstance, M: np.ndarray) -> np.ndarray:
    """``P_Ω(M)``: keep the observed entries."""
    M = _check_square(inst, M)
    return np.where(inst.mask, M, 0.0)


def project_omega_l(inst: MatrixCompletionInstance, M: np.ndarray, l: int) -> np.ndarray:
    """``P_{Ω_l}(M)``: observed entries on row or column ``l``."""
    M = _check_square(inst, M)
    _check_index(inst.n, l)
    return np.where(inst.mask & _line_mask(inst.n, l), M, 0.0)


def project_omega_minus_l(inst: MatrixCompletionInstance, M: np.ndarray, l: int) -> np.ndarray:
    """``P_{Ω^{-l}}(M)``: observed entries off row and column ``l``."""
    M = _check_square(inst, M)
    _check_index(inst.n, l)
    return np.where(inst.mask & ~_line_mask(inst.n, l), M, 0.0)


def project_l(M: np.ndarray, l: int) -> np.ndarray:
    """``P_l(M)``: all entries on row or column ``l``, regardless of the mask."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"Expected a square matrix, got shape {M.shape}")
    _check_index(M.shape[0], l)
    return np.where(_line_mask(M.shape[0], l), M, 0.0)


# --- Loss, gradient and Hessian -------------------------------------------


def _check_factor(inst: MatrixCompletionInstance, X: np.ndarray, name: str = 'X') -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (inst.n, inst.r):
        raise InvalidArgumentError(f"{name} must be {inst.n}x{inst.r}, got shape {X.shape}")
    return X


def _omega_products(inst: MatrixCompletionInstance, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``(X V^T)_{jk}`` for ``(j, k)`` in Ω."""
    return np.einsum('ij,ij->i', X[inst.omega_rows], V[inst.omega_cols])


def _residual(inst: MatrixCompletionInstance, X: np.ndarray, target: np.ndarray) -> np.ndarray:
    return _omega_products(inst, X, X) - target


def _omega_operator(inst: MatrixCompletionInstance, values: np.ndarray) -> sparse.csr_matrix:
    return sparse.csr_matrix((values, (inst.omega_rows, inst.omega_cols)), shape=(inst.n, inst.n))


def _clean_values(inst: MatrixCompletionInstance) -> np.ndarray:
    if not inst.has_truth:
        raise InvalidArgumentError("The clean Hessian needs the ground-truth matrix")
    return inst.truth_matrix[inst.omega_rows, inst.omega_cols]


def mc_loss(inst: MatrixCompletionInstance, X: np.ndarray) -> float:
    X = _check_factor(inst, X)
    residual = _residual(inst, X, inst.observed_values)
    return float(residual @ residual) / (4.0 * inst.p)


def mc_gradient(inst: MatrixCompletionInstance, X: np.ndarray) -> np.ndarray:
    """``(1/p) P_Ω(X X^T - Y) X``."""
    X = _check_factor(inst, X)
    residual = _residual(inst, X, inst.observed_values)
    return (_omega_operator(inst, residual) @ X) / inst.p


def mc_clean_gradient(inst: MatrixCompletionInstance, X: np.ndarray) -> np.ndarray:
    """``(1/p) P_Ω(X X^T - M*) X``, the noiseless gradient."""
    X = _check_factor(inst, X)
    residual = _residual(inst, X, _clean_values(inst))
    return (_omega_operator(inst, residual) @ X) / inst.p


def mc_clean_hessian_quadform(inst: MatrixCompletionInstance, X: np.ndarray, V: np.ndarray) -> float:
    """``(1/2p)||P_Ω(V X^T + X V^T)||_F^2 + (1/p)<P_Ω(X X^T - M*), V V^T>``."""
    X = _check_factor(inst, X)
    V = _check_factor(inst, V, 'V')
    residual = _residual(inst, X, _clean_values(inst))
    sym = _omega_products(inst, V, X) + _omega_products(inst, X, V)
    return float(sym @ sym) / (2.0 * inst.p) + float(residual @ _omega_products(inst, V, V)) / inst.p


def mc_clean_hessian_apply(inst: MatrixCompletionInstance, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Clean Hessian applied to ``V``: ``(1/p)[P_Ω(V X^T + X V^T) X + P_Ω(X X^T - M*) V]``."""
    X = _check_factor(inst, X)
    V = _check_factor(inst, V, 'V')
    residual = _residual(inst, X, _clean_values(inst))
    sym = _omega_products(inst, V, X) + _omega_products(inst, X, V)
    return (_omega_operator(inst, sym) @ X + _omega_operator(inst, residual) @ V) / inst.p


# --- Initialization and metrics --------------------------------------------


def mc_spectral_from_matrix(M0: np.ndarray, r: int) -> np.ndarray:
    """``U (Σ)^{1/2}`` from the rank-``r`` eigendecomposition of ``M0``."""
    eig = top_eigs_sym(M0, r)
    if np.any(eig.values <= 0.0):
        raise NumericFailureError(
            f"Spectral initialization found non-positive eigenvalues {eig.values.min():.3e}",
            last_state=eig.values,
        )
    return eig.vectors * np.sqrt(eig.values)


def mc_spectral_init(inst: MatrixCompletionInstance) -> np.ndarray:
    """Rank-``r`` spectral estimate from ``P_Ω(Y)/p``."""
    return mc_spectral_from_matrix(inst.observed / inst.p, inst.r)


def row_norms(X: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X, axis=1)


def _gram_difference_eigs(X: np.ndarray, Xstar: np.ndarray) -> np.ndarray:
    """Nonzero eigenvalues of ``X X^T - X* X*^T`` via a thin QR of ``[X, X*]``."""
    r = X.shape[1]
    _, R = scipy.linalg.qr(np.hstack([X, Xstar]), mode='economic')
    signs = np.concatenate([np.ones(r), -np.ones(Xstar.shape[1])])
    core = (R * signs) @ R.T
    return scipy.linalg.eigvalsh(0.5 * (core + core.T))


def mc_matrix_errors(inst: MatrixCompletionInstance, X: np.ndarray) -> Dict[str, float]:
    """``||XX^T - M*||_F / ||M*||_F`` and ``||XX^T - M*|| / ||M*||``."""
    X = _check_factor(inst, X)
    if inst.truth_factor is None:
        raise InvalidArgumentError("Matrix errors need the ground-truth factor")
    diff = _gram_difference_eigs(X, inst.truth_factor)
    truth = scipy.linalg.svdvals(inst.truth_factor) ** 2
    return {
        'mat_err_fro': float(np.linalg.norm(diff) / np.linalg.norm(truth)),
        'mat_err_op': float(np.max(np.abs(diff)) / np.max(np.abs(truth))),
    }


def mc_error_report(inst: MatrixCompletionInstance, X: np.ndarray) -> Dict[str, float]:
    """Factor errors modulo rotation (Frobenius, spectral, ℓ2/ℓ∞) and the entrywise error of X X^T.

    The matrix-level Frobenius and spectral errors are included as well.
    """
    X = _check_factor(inst, X)
    if inst.truth_factor is None or inst.truth_matrix is None:
        raise InvalidArgumentError("Error report needs the ground truth")
    Xstar = inst.truth_factor
    H = procrustes_align(X, Xstar).rotation
    D = X @ H - Xstar
    report = {
        'err_fro': float(np.linalg.norm(D) / np.linalg.norm(Xstar)),
        'err_op': float(np.linalg.norm(D, 2) / np.linalg.norm(Xstar, 2)),
        'err_2inf': float(row_norms(D).max() / row_norms(Xstar).max()),
        'err_entrywise': float(np.max(np.abs(X @ X.T - inst.truth_matrix)) / np.max(np.abs(inst.truth_matrix))),
    }
    report.update(mc_matrix_errors(inst, X))
    return report


def mc_incoherence_param(factor: np.ndarray) -> float:
    """``μ = n ||U||_{2,∞}^2 / r`` where ``U`` spans the columns of ``factor``."""
    factor = np.asarray(factor, dtype=float)
    if factor.ndim != 2 or factor.shape[1] < 1 or factor.shape[1] > factor.shape[0]:
        raise InvalidArgumentError(f"Expected a tall n x r matrix, got shape {factor.shape}")
    n, r = factor.shape
    U, s, _ = scipy.linalg.svd(factor, full_matrices=False)
    if s[-1] <= 0.0:
        raise InvalidArgumentError("Factor is rank deficient")
    return float(n * np.max(np.sum(U**2, axis=1)) / r)


def mc_spectrum_diagnostics(inst: MatrixCompletionInstance) -> Dict[str, float]:
    """``σ_max``, ``σ_min``, ``κ`` of ``M*`` and the step bound ``2 / (25 κ σ_max)``."""
    if inst.truth_factor is None:
        raise InvalidArgumentError("Spectrum diagnostics need the ground-truth factor")
    values = scipy.linalg.svdvals(inst.truth_factor) ** 2
    sigma_max, sigma_min = float(values.max()), float(values.min())
    kappa = sigma_max / sigma_min
    return {
        'sigma_max': sigma_max,
        'sigma_min': sigma_min,
        'kappa': kappa,
        'step_bound': 2.0 / (25.0 * kappa * sigma_max),
    }


def mc_snr(inst: MatrixCompletionInstance) -> float:
    """``Σ_Ω (M*_jk)^2 / Σ_Ω Var(E_jk)`` with ``Var(E_jk) = σ^2``."""
    if not inst.has_truth:
        raise InvalidArgumentError("SNR needs the ground-truth matrix")
    if inst.sigma == 0.0:
        return float('inf')
    signal = _clean_values(inst)
    return float(signal @ signal) / (signal.size * inst.sigma**2)


def mc_loo_bound(inst: MatrixCompletionInstance) -> float:
    """``μ r sqrt(log n / (n p)) ||X*||_{2,∞} + (σ / σ_min) sqrt(n log n / p) ||X*||_{2,∞}``."""
    if inst.truth_factor is None:
        raise InvalidArgumentError("The leave-one-out bound needs the ground-truth factor")
    n, r, p = inst.n, inst.r, inst.p
    mu = mc_incoherence_param(inst.truth_factor)
    row_max = float(row_norms(inst.truth_factor).max())
    sigma_min = mc_spectrum_diagnostics(inst)['sigma_min']
    log_n = np.log(n) if n > 1 else 1.0
    return float(
        mu * r * np.sqrt(log_n / (n * p)) * row_max
        + (inst.sigma / sigma_min) * np.sqrt(n * log_n / p) * row_max
    )


# --- Solver ----------------------------------------------------------------


def _stop_value(inst: MatrixCompletionInstance, X: np.ndarray, metric: str) -> float:
    if metric == 'mat_err_fro':
        return mc_matrix_errors(inst, X)['mat_err_fro']
    H = procrustes_align(X, inst.truth_factor).rotation
    return float(np.linalg.norm(X @ H - inst.truth_factor) / np.linalg.norm(inst.truth_factor))


def _regularizer_gradient(X: np.ndarray, reg_lambda: float, reg_alpha: float) -> np.ndarray:
    """Gradient of ``λ Σ_j max(||x_j||^2 - α, 0)^2``."""
    excess = np.maximum(np.sum(X**2, axis=1) - reg_alpha, 0.0)
    return 4.0 * reg_lambda * excess[:, None] * X


def _project_rows(X: np.ndarray, radius: float) -> np.ndarray:
    norms = row_norms(X)
    scale = np.minimum(1.0, radius / np.maximum(norms, np.finfo(float).tiny))
    return X * scale[:, None]


def _record(inst: MatrixCompletionInstance, t: int, X: np.ndarray) -> McRecord:
    loss = mc_loss(inst, X)
    if inst.truth_factor is None or inst.truth_matrix is None:
        return McRecord(iteration=t, loss=loss)
    return McRecord(iteration=t, loss=loss, **mc_error_report(inst, X))


def mc_run(
    inst: MatrixCompletionInstance,
    config: Optional[McConfig] = None,
    X0: Optional[np.ndarray] = None,
) -> McTrajectory:
    """Gradient descent ``X^{t+1} = X^t - η ∇f(X^t)`` from the spectral (or given) initial point.

    ``baseline='projected'`` clips every row of ``X^{t+1}`` to the projection
    radius; ``baseline='regularized'`` adds the gradient of the row-norm
    penalty. Stops at ``max_iters`` or when the stop metric reaches ``tol_rel``.
    """
    config = config or McConfig()
    X = mc_spectral_init(inst) if X0 is None else _check_factor(inst, X0, 'X0').copy()
    initial = X.copy()

    eta = config.eta
    if eta == 0.0:
        logger.warning("Matrix completion run with eta = 0; the iterate stays at its initial point")
    radius = config.projection_radius
    if config.baseline == 'projected' and radius is None:
        radius = 2.0 * float(row_norms(initial).max())
    reg_alpha = config.reg_alpha
    if config.baseline == 'regularized' and reg_alpha is None:
        reg_alpha = 2.0 * float(row_norms(initial).max() ** 2)

    can_stop = inst.truth_factor is not None
    records = []
    iterates = []
    stop_reason = 'max_iters'
    converged = False
    start = time.perf_counter()

    t = 0
    while True:
        if can_stop and _stop_value(inst, X, config.stop_metric) <= config.tol_rel:
            stop_reason, converged = 'tolerance', True
        done = converged or t >= config.max_iters

        if done or t % config.record_every == 0:
            record = _record(inst, t, X)
            records.append(record)
            if config.keep_iterates:
                iterates.append(X.copy())
            logger.debug(f"MC iter {t}: loss={record.loss:.3e} err_fro={record.err_fro:.3e}")
        if done:
            break

        step = mc_gradient(inst, X)
        if config.baseline == 'regularized':
            step = step + _regularizer_gradient(X, config.reg_lambda, reg_alpha)
        X_next = X - eta * step
        if config.baseline == 'projected':
            X_next = _project_rows(X_next, radius)
        t += 1
        if not np.all(np.isfinite(X_next)):
            raise NumericFailureError("Matrix completion iterate became non-finite", iteration=t, last_state=X)
        X = X_next

    logger.info(
        f"Matrix completion ({config.baseline}) finished after {t} iterations ({stop_reason}), "
        f"err_fro={records[-1].err_fro:.3e}, {time.perf_counter() - start:.2f}s"
    )
    return McTrajectory(
        iterations=t,
        converged=converged,
        stop_reason=stop_reason,
        eta=eta,
        iterates=iterates,
        records=records,
        baseline=config.baseline,
        initial=initial,
        final=X,
    )
