"""
Shared numerical primitives: top eigenpairs, the leading singular triplet,
orthogonal Procrustes and the complex scalar alignment used by blind
deconvolution.
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg

from models import AlignmentSolution, EigResult, ProcrustesResult, SvdTriple
from utils.errors import InvalidArgumentError, NumericFailureError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
RESIDUAL_TOL = 1e-8
CERTIFICATE_TOL = 1e-8


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive (lowest index on ties)."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def top_eigs_sym(M: np.ndarray, r: int) -> EigResult:
    """Top ``r`` eigenpairs of a symmetric matrix by algebraic value, descending."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"Expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if not 1 <= r <= n:
        raise InvalidArgumentError(f"Rank {r} out of range for a {n}x{n} matrix")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("Matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M))))
    asymmetry = float(np.max(np.abs(M - M.T)))
    if asymmetry > SYMMETRY_TOL * scale:
        raise InvalidArgumentError(f"Matrix is not symmetric (max asymmetry {asymmetry:.3e})")

    sym = 0.5 * (M + M.T)
    try:
        values, vectors = scipy.linalg.eigh(sym, subset_by_index=[n - r, n - 1])
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericFailureError(f"Symmetric eigensolver failed: {e}") from e

    values = values[::-1].copy()
    vectors = _fix_signs(np.ascontiguousarray(vectors[:, ::-1]))
    residuals = np.linalg.norm(sym @ vectors - vectors * values, axis=0)
    bound = RESIDUAL_TOL * float(np.linalg.norm(sym))
    if np.any(residuals > bound):
        raise NumericFailureError(
            f"Eigenpair residual {float(residuals.max()):.3e} exceeds {bound:.3e}",
            last_state=residuals,
        )
    return EigResult(values=values, vectors=vectors, residuals=residuals)


def top_singular_triplet(M: np.ndarray) -> SvdTriple:
    """Leading singular value and unit singular vectors with ``M @ right = sigma1 * left``.

    The phase is fixed so the largest-magnitude entry of ``left`` is positive
    real. The zero matrix returns ``sigma1 = 0`` with first-coordinate unit
    vectors and ``converged=False``.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or min(M.shape) < 1:
        raise InvalidArgumentError(f"Expected a nonempty matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("Matrix has non-finite entries")
    rows, cols = M.shape
    if not np.any(M):
        left = np.zeros(rows, dtype=complex)
        right = np.zeros(cols, dtype=complex)
        left[0] = right[0] = 1.0
        return SvdTriple(sigma1=0.0, left=left, right=right, converged=False)

    try:
        U, s, Vh = scipy.linalg.svd(M, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericFailureError(f"SVD failed: {e}") from e

    left = U[:, 0]
    right = Vh[0].conj()
    k = int(np.argmax(np.abs(left)))
    phase = left[k] / abs(left[k])
    left = left * phase.conjugate()
    right = right * phase.conjugate()
    left[k] = abs(left[k])

    sigma1 = float(s[0])
    residual = float(np.linalg.norm(M @ right - sigma1 * left))
    if residual > RESIDUAL_TOL * float(np.linalg.norm(M)):
        raise NumericFailureError(f"Singular triplet residual {residual:.3e} too large", last_state=s)
    return SvdTriple(sigma1=sigma1, left=left, right=right, converged=True)


def procrustes_align(X: np.ndarray, Xstar: np.ndarray) -> ProcrustesResult:
    """Orthonormal ``H = U V^T`` from the SVD of ``X^T X*``, minimizing ``||X H - X*||_F``."""
    X = np.asarray(X, dtype=float)
    Xstar = np.asarray(Xstar, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Xstar.ndim == 1:
        Xstar = Xstar[:, None]
    if X.shape != Xstar.shape or X.shape[1] < 1:
        raise InvalidArgumentError(f"Procrustes needs equal n x r shapes, got {X.shape} and {Xstar.shape}")
    r = X.shape[1]

    C = X.T @ Xstar
    try:
        U, s, Vt = scipy.linalg.svd(C)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericFailureError(f"Procrustes SVD failed: {e}") from e
    H = U @ Vt
    degenerate = bool(s[-1] <= r * np.finfo(float).eps * max(float(s[0]), np.finfo(float).tiny))

    # H^T X^T X* must be symmetric PSD at the optimum
    S = H.T @ C
    scale = max(1.0, float(np.max(np.abs(C))))
    if np.max(np.abs(S - S.T)) > CERTIFICATE_TOL * scale:
        raise NumericFailureError("Procrustes certificate failed: H^T X^T X* is not symmetric")
    if float(np.linalg.eigvalsh(0.5 * (S + S.T))[0]) < -CERTIFICATE_TOL * scale:
        raise NumericFailureError("Procrustes certificate failed: H^T X^T X* is not PSD")

    residual = float(np.linalg.norm(X @ H - Xstar))
    return ProcrustesResult(rotation=H, residual=residual, degenerate=degenerate, singular_values=s)


def power_iteration(
    matmul: Callable[[np.ndarray], np.ndarray],
    dim: int,
    rng: np.random.Generator,
    maxiter: int = 200,
    rtol: float = 1e-6,
) -> float:
    """Largest-magnitude eigenvalue estimate of a symmetric operator given by ``matmul``."""
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    eigval = np.inf
    for _ in range(maxiter):
        w = matmul(v)
        new_eigval = float(np.linalg.norm(w))
        if new_eigval == 0.0:
            return 0.0
        v = w / new_eigval
        if abs(new_eigval - eigval) <= rtol * new_eigval:
            return new_eigval
        eigval = new_eigval
    logger.debug(f"Power iteration stopped at maxiter={maxiter} with estimate {eigval:.6g}")
    return float(eigval)


class _AlignmentObjective:
    """``g(α) = ||h/conj(α) - h*||² + ||αx - x*||²`` in terms of four inner products."""

    def __init__(self, h: np.ndarray, x: np.ndarray, hstar: np.ndarray, xstar: np.ndarray):
        with np.errstate(over='ignore', invalid='ignore'):
            self.a = np.float64(np.vdot(x, x).real)
            self.b = np.float64(np.vdot(h, h).real)
            self.s = np.complex128(np.vdot(xstar, x))
            self.t = np.complex128(np.vdot(hstar, h))
            self.const = np.float64(np.vdot(hstar, hstar).real + np.vdot(xstar, xstar).real)
        if not all(np.isfinite(v) for v in (self.a, self.b, self.s, self.t, self.const)):
            raise NumericFailureError("Alignment inner products overflowed", last_state=(h, x))

    def value(self, alpha):
        mod2 = np.abs(alpha) ** 2
        return (
            self.a * mod2
            - 2.0 * np.real(alpha * self.s)
            + self.b / mod2
            - 2.0 * np.real(self.t / np.conj(alpha))
            + self.const
        )

    def gradient(self, alpha: complex) -> complex:
        """Wirtinger derivative with respect to ``conj(α)``."""
        alpha = np.complex128(alpha)
        ac = np.conj(alpha)
        return self.a * alpha - self.s.conjugate() - self.b / (alpha * ac**2) + self.t / ac**2

    def hessian(self, alpha: complex) -> Tuple[float, complex]:
        """``(P, Q)`` of the Wirtinger Hessian ``[[P, Q], [conj(Q), P]]``."""
        alpha = np.complex128(alpha)
        ac = np.conj(alpha)
        P = self.a + self.b / np.abs(alpha) ** 4
        Q = 2.0 * self.b / (alpha * ac**3) - 2.0 * self.t / ac**3
        return P, Q

    def gradient_norm(self, alpha: complex) -> float:
        return float(np.sqrt(2.0) * np.abs(self.gradient(alpha)))


def _check_alignment_inputs(h, x, hstar, xstar):
    arrays = [np.asarray(v, dtype=complex) for v in (h, x, hstar, xstar)]
    if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
        raise InvalidArgumentError("Alignment needs four vectors of equal length")
    if not np.any(arrays[0]) or not np.any(arrays[1]):
        raise InvalidArgumentError("Alignment needs nonzero h and x")
    return arrays


def alignment_objective(alpha: complex, h, x, hstar, xstar) -> float:
    """Direct evaluation of ``g(α)`` from the vectors."""
    alpha = complex(alpha)
    h, x, hstar, xstar = (np.asarray(v, dtype=complex) for v in (h, x, hstar, xstar))
    return float(np.linalg.norm(h / alpha.conjugate() - hstar) ** 2 + np.linalg.norm(alpha * x - xstar) ** 2)


def alignment_gradient(alpha: complex, h, x, hstar, xstar) -> complex:
    h, x, hstar, xstar = _check_alignment_inputs(h, x, hstar, xstar)
    return _AlignmentObjective(h, x, hstar, xstar).gradient(complex(alpha))


def alignment_hessian_quadform(alpha: complex, h, x, hstar, xstar, u: complex, v: complex) -> float:
    """``[u; v]^H [[P, Q], [conj(Q), P]] [u; v]`` for the Wirtinger Hessian of ``g`` at ``α``."""
    h, x, hstar, xstar = _check_alignment_inputs(h, x, hstar, xstar)
    P, Q = _AlignmentObjective(h, x, hstar, xstar).hessian(complex(alpha))
    return float(P * (abs(u) ** 2 + abs(v) ** 2) + 2.0 * (np.conj(u) * Q * v).real)


def alignment_certificate_gap(alpha: complex, h, x, hstar, xstar) -> float:
    """``|x̃^H(x̃ - x*) - (h̃ - h*)^H h̃|`` at ``x̃ = αx``, ``h̃ = h/conj(α)``; zero at a stationary α."""
    alpha = complex(alpha)
    h, x, hstar, xstar = (np.asarray(v, dtype=complex) for v in (h, x, hstar, xstar))
    xt = alpha * x
    ht = h / alpha.conjugate()
    return float(abs(np.vdot(xt, xt - xstar) - np.vdot(ht - hstar, ht)))


def _newton(
    objective: _AlignmentObjective,
    alpha: complex,
    max_iters: int = 100,
    tol: float = 1e-8,
    min_modulus: float = 1e-6,
) -> Tuple[complex, bool, int]:
    """Damped Newton on the Wirtinger system; returns (α, converged, iterations)."""
    g = float(objective.value(alpha))
    for iteration in range(max_iters):
        G = objective.gradient(alpha)
        if np.sqrt(2.0) * abs(G) <= tol * max(1.0, g):
            return alpha, True, iteration
        P, Q = objective.hessian(alpha)
        det = P * P - np.abs(Q) ** 2
        if not np.isfinite(det) or det <= 0.0:
            return alpha, False, iteration
        step = (-G * P + Q * G.conjugate()) / det

        scale = 1.0
        accepted = False
        for _ in range(51):
            candidate = alpha + scale * step
            if abs(candidate) >= min_modulus:
                g_new = float(objective.value(candidate))
                if g_new <= g or (
                    g_new <= g + 1e-14 * max(1.0, g) and abs(objective.gradient(candidate)) < abs(G)
                ):
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            return alpha, False, iteration
        alpha, g = candidate, g_new
    G = objective.gradient(alpha)
    return alpha, bool(np.sqrt(2.0) * abs(G) <= tol * max(1.0, g)), max_iters


def _grid_search(objective: _AlignmentObjective) -> complex:
    """Best point of a log-polar grid over |α| in [1/8, 8]."""
    moduli = np.geomspace(1.0 / 8.0, 8.0, 97)
    phases = np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 180, endpoint=False))
    grid = np.outer(moduli, phases)
    values = objective.value(grid)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    return complex(grid[i, j])


def scalar_align(h, x, hstar, xstar) -> AlignmentSolution:
    """Complex ``α̂`` minimizing ``||h/conj(α) - h*||² + ||αx - x*||²``.

    Damped Newton from ``α = 1``; if Newton cannot decrease ``g`` the search
    restarts from the best point of a log-polar grid.
    """
    h, x, hstar, xstar = _check_alignment_inputs(h, x, hstar, xstar)
    objective = _AlignmentObjective(h, x, hstar, xstar)

    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        alpha, converged, iterations = _newton(objective, 1.0 + 0.0j)
        method = 'newton'
        if not converged:
            logger.debug(f"Newton alignment stalled at iteration {iterations}; falling back to grid search")
            start = _grid_search(objective)
            alpha, converged, polish = _newton(objective, start)
            iterations += polish
            method = 'grid-fallback'

        objective_value = alignment_objective(alpha, h, x, hstar, xstar)
        baseline = alignment_objective(1.0, h, x, hstar, xstar)
    if not (np.isfinite(objective_value) and np.isfinite(baseline)):
        raise NumericFailureError("Alignment objective is not finite", last_state=(h, x))
    if baseline < objective_value:
        alpha = 1.0 + 0.0j
        objective_value = baseline
        converged = objective.gradient_norm(alpha) <= 1e-8 * max(1.0, baseline)

    return AlignmentSolution(
        alpha=complex(alpha),
        objective=max(objective_value, 0.0),
        converged=bool(converged),
        method=method,
        iterations=iterations,
    )


def alignment_distance(h, x, hstar, xstar, solution: Optional[AlignmentSolution] = None) -> float:
    """``sqrt(g(α̂))``; reuses ``solution`` when the caller already aligned."""
    if solution is None:
        solution = scalar_align(h, x, hstar, xstar)
    return float(np.sqrt(solution.objective))
