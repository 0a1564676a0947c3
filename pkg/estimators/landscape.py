"""
Empirical restricted strong convexity and smoothness checks.

Each check samples points in the region where the local curvature bounds
are claimed, evaluates the Hessian quadratic form along random admissible
directions, and compares the extremes against slack thresholds.
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg

from models import BlindDeconvInstance, LandscapeReport, MatrixCompletionInstance, PhaseRetrievalInstance, RngSeed
from utils.errors import InvalidArgumentError
from utils.helpers import RNG
from utils.numlin import alignment_hessian_quadform, power_iteration, procrustes_align, scalar_align

from .blind_deconvolution import bd_hessian_apply, bd_probe
from .matrix_completion import mc_clean_hessian_apply, mc_clean_hessian_quadform, mc_spectrum_diagnostics, row_norms

logger = logging.getLogger(__name__)

PR_LOWER = 0.25
PR_UPPER_PER_LOG_N = 50.0
MC_LOWER_PER_SIGMA_MIN = 0.25
MC_UPPER_PER_SIGMA_MAX = 3.0
BD_LOWER = 0.2
BD_UPPER = 3.5
ALIGNMENT_LOWER = 0.5


def _report(problem, values_low, values_high, lower, upper, **details) -> LandscapeReport:
    low = float(np.min(values_low))
    high = float(np.max(values_high))
    passed = bool(low >= lower and high <= upper)
    logger.info(
        f"Landscape check {problem}: min={low:.4g} (>= {lower:.4g}), max={high:.4g} (<= {upper:.4g}), "
        f"{'passed' if passed else 'FAILED'}"
    )
    return LandscapeReport(
        problem=problem,
        probes=len(values_low),
        min_quadform=low,
        max_quadform=high,
        lower_threshold=float(lower),
        upper_threshold=float(upper),
        passed=passed,
        details={k: float(v) for k, v in details.items()},
    )


def _complex_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    return RNG.unit_sphere(rng, n, complex_valued=True)


def pr_landscape_check(
    inst: PhaseRetrievalInstance,
    seed: RngSeed,
    points: int = 50,
    directions: int = 200,
    radius: float = 0.1,
    incoherence_cap: float = 5.0,
) -> LandscapeReport:
    """Quadratic form of ``∇²f(x)`` on unit directions at points with ``||x - x*|| <= radius``
    and ``max_j |a_j^T (x - x*)| <= incoherence_cap * sqrt(log n)``."""
    if not inst.has_truth:
        raise InvalidArgumentError("Landscape check needs the ground truth")
    rng = RNG.generator(seed)
    n = inst.n
    A, y, xstar = inst.designs, inst.measurements, inst.truth
    cap = incoherence_cap * np.sqrt(np.log(n))

    per_point_min, per_point_max = [], []
    rejected = 0
    while len(per_point_min) < points:
        x = xstar + radius * rng.random() * RNG.unit_sphere(rng, n)
        if np.max(np.abs(A @ (x - xstar))) > cap:
            rejected += 1
            if rejected > 10 * points:
                raise InvalidArgumentError("Could not sample points inside the incoherence region")
            continue
        V = rng.standard_normal((n, directions))
        V /= np.linalg.norm(V, axis=0)
        weights = (3.0 * (A @ x) ** 2 - y) / inst.scale
        quadforms = weights @ (A @ V) ** 2
        per_point_min.append(quadforms.min())
        per_point_max.append(quadforms.max())

    return _report(
        'pr',
        per_point_min,
        per_point_max,
        PR_LOWER,
        PR_UPPER_PER_LOG_N * np.log(n),
        points=points,
        directions=directions,
        rejected=rejected,
    )


def mc_landscape_check(
    inst: MatrixCompletionInstance,
    seed: RngSeed,
    constructions: int = 20,
    epsilon: float = 0.05,
    delta: float = 0.1,
    power_iters: int = 200,
) -> LandscapeReport:
    """Clean Hessian at ``X`` with ``||X - X*||_{2,∞} <= ε ||X*||_{2,∞}`` along ``V = Y H_Y - Z``
    with ``||Z - X*|| <= δ ||X*||``; lower bound on ``quadform / ||V||_F^2`` and a power-iteration
    estimate of the operator norm."""
    if inst.truth_factor is None or inst.truth_matrix is None:
        raise InvalidArgumentError("Landscape check needs the ground truth")
    rng = RNG.generator(seed)
    n, r = inst.n, inst.r
    Xstar = inst.truth_factor
    spectrum = mc_spectrum_diagnostics(inst)
    row_max = float(row_norms(Xstar).max())
    op_norm = float(np.linalg.norm(Xstar, 2))

    def spectral_perturbation() -> np.ndarray:
        G = rng.standard_normal((n, r))
        return delta * op_norm * rng.random() * G / np.linalg.norm(G, 2)

    ratios, norms = [], []
    for _ in range(constructions):
        rows = rng.standard_normal((n, r))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        X = Xstar + epsilon * row_max * rng.random((n, 1)) * rows

        Q, _ = scipy.linalg.qr(rng.standard_normal((r, r)))
        Z = Xstar + spectral_perturbation()
        Y = Xstar @ Q + spectral_perturbation()
        V = Y @ procrustes_align(Y, Z).rotation - Z
        ratios.append(mc_clean_hessian_quadform(inst, X, V) / float(np.sum(V**2)))

        norms.append(
            power_iteration(
                lambda v: mc_clean_hessian_apply(inst, X, v.reshape(n, r)).ravel(), n * r, rng, maxiter=power_iters
            )
        )

    return _report(
        'mc',
        ratios,
        norms,
        MC_LOWER_PER_SIGMA_MIN * spectrum['sigma_min'],
        MC_UPPER_PER_SIGMA_MAX * spectrum['sigma_max'],
        sigma_min=spectrum['sigma_min'],
        sigma_max=spectrum['sigma_max'],
        constructions=constructions,
    )


def bd_landscape_check(
    inst: BlindDeconvInstance,
    seed: RngSeed,
    constructions: int = 50,
    delta: Optional[float] = None,
) -> LandscapeReport:
    """``u^H [D ∇²f(z) + ∇²f(z) D] u / ||u||^2`` for aligned pairs within ``δ = 0.01/log²m`` of the
    truth and ``|γ - 1| <= δ``; the smoothness side uses ``u^H ∇²f(z) u / ||u||^2`` on the same probes
    and on unstructured random directions."""
    if not inst.has_truth:
        raise InvalidArgumentError("Landscape check needs the ground truth")
    rng = RNG.generator(seed)
    K = inst.K
    if delta is None:
        delta = 0.01 / np.log(inst.m) ** 2
    hstar, xstar = inst.truth_h, inst.truth_x

    def near(v):
        return v + delta * rng.random() * _complex_unit(rng, K)

    convexity, smoothness = [], []
    for _ in range(constructions):
        h, x = near(hstar), near(xstar)
        h1, x1, h2, x2 = near(hstar), near(xstar), near(hstar), near(xstar)
        alpha = scalar_align(h1, x1, h2, x2).alpha
        h1, x1 = h1 / np.conj(alpha), alpha * x1

        gammas = 1.0 + delta * (2.0 * rng.random(2) - 1.0)
        D = np.repeat(np.concatenate([gammas, gammas]), K)
        u = bd_probe(h1 - h2, x1 - x2)
        u /= np.linalg.norm(u)
        Hu = bd_hessian_apply(inst, h, x, u)
        convexity.append(2.0 * float(np.vdot(D * u, Hu).real))
        smoothness.append(float(np.vdot(u, Hu).real))

        w = bd_probe(_complex_unit(rng, K), _complex_unit(rng, K))
        w /= np.linalg.norm(w)
        smoothness.append(float(np.vdot(w, bd_hessian_apply(inst, h, x, w)).real))

    return _report('bd', convexity, smoothness, BD_LOWER, BD_UPPER, delta=delta, constructions=constructions)


def alignment_convexity_check(
    seed: RngSeed,
    K: int = 10,
    delta: float = 0.05,
    alpha_radius: Optional[float] = None,
    probes: int = 100,
) -> LandscapeReport:
    """Wirtinger Hessian of the alignment objective at ``|α - 1| <= alpha_radius`` for ``(h, x)``
    within ``δ`` of the truth, against ``(|u|^2 + |v|^2) / 2``.

    ``alpha_radius`` defaults to ``min(18δ, 0.25)``. The cap matters once ``δ > 1/72``:
    with ``δ = 0.05`` the bare radius ``18δ = 0.9`` admits ``α = 0.1``, and there, even
    at ``h = h*``, ``x = x*``, the Hessian ``[[P, Q], [conj(Q), P]]`` has ``P = 1 + |α|^-4 ≈ 1e4``
    against ``|Q| = 2|α|^-4 - 2|α|^-3 ≈ 1.8e4`` and is indefinite. For real ``α`` the
    objective stays convex only above about ``α = 0.47`` (the root of ``α^4 + 2α = 1``).
    """
    rng = RNG.generator(seed)
    if alpha_radius is None:
        alpha_radius = min(18.0 * delta, 0.25)
    hstar = _complex_unit(rng, K)
    xstar = _complex_unit(rng, K)

    ratios = []
    for _ in range(probes):
        h = hstar + delta * rng.random() * _complex_unit(rng, K)
        x = xstar + delta * rng.random() * _complex_unit(rng, K)
        alpha = 1.0 + alpha_radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        u, v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        value = alignment_hessian_quadform(alpha, h, x, hstar, xstar, u, v)
        ratios.append(value / (abs(u) ** 2 + abs(v) ** 2))

    return _report(
        'bd', ratios, ratios, ALIGNMENT_LOWER, np.inf, delta=delta, alpha_radius=alpha_radius, probes=probes
    )
