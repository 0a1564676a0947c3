"""
Tests for the shared numerical primitives.
"""

import numpy as np
import pytest

from models import RngSeed
from utils.errors import InvalidArgumentError, NumericFailureError
from utils.helpers import RNG
from utils.numlin import (
    alignment_certificate_gap,
    alignment_gradient,
    alignment_objective,
    power_iteration,
    procrustes_align,
    scalar_align,
    top_eigs_sym,
    top_singular_triplet,
)


@pytest.fixture()
def rng():
    return RNG.generator(RngSeed(master_seed=2024))


def _complex_unit(rng, n):
    return RNG.unit_sphere(rng, n, complex_valued=True)


class TestTopEigs:
    """Test the symmetric top-r eigensolver."""

    def test_diagonal(self):
        """diag(3, 2, 1) with r = 2 gives (3, 2) and e1, e2 with positive signs."""
        result = top_eigs_sym(np.diag([3.0, 2.0, 1.0]), 2)
        assert np.allclose(result.values, [3.0, 2.0])
        assert np.allclose(result.vectors, np.eye(3)[:, :2])

    def test_population_matrix(self, rng):
        """I + 2 x x^T has top eigenvalue 3 with eigenvector ±x."""
        x = RNG.unit_sphere(rng, 6)
        result = top_eigs_sym(np.eye(6) + 2.0 * np.outer(x, x), 1)
        assert abs(result.values[0] - 3.0) <= 1e-12
        assert min(np.linalg.norm(result.vectors[:, 0] - x), np.linalg.norm(result.vectors[:, 0] + x)) <= 1e-10

    def test_against_dense_oracle(self, rng):
        """Random 8x8 symmetric: values match a full dense decomposition."""
        G = rng.standard_normal((8, 8))
        M = G + G.T
        result = top_eigs_sym(M, 3)
        oracle = np.sort(np.linalg.eigvalsh(M))[::-1][:3]
        assert np.allclose(result.values, oracle, atol=1e-8)
        assert np.all(result.residuals <= 1e-8 * np.linalg.norm(M))
        assert np.allclose(result.vectors.T @ result.vectors, np.eye(3), atol=1e-10)

    def test_sign_convention(self, rng):
        """The largest-magnitude entry of each returned vector is positive."""
        G = rng.standard_normal((10, 10))
        vectors = top_eigs_sym(G + G.T, 4).vectors
        idx = np.argmax(np.abs(vectors), axis=0)
        assert np.all(vectors[idx, np.arange(4)] > 0.0)

    def test_non_symmetric_rejected(self):
        with pytest.raises(InvalidArgumentError):
            top_eigs_sym(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)

    def test_rank_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            top_eigs_sym(np.eye(3), 4)


class TestTopSingularTriplet:
    """Test the leading singular triplet."""

    def test_rank_one(self, rng):
        """M = h x^H gives sigma1 = ||h|| ||x|| with vectors along h and x."""
        h = 2.0 * _complex_unit(rng, 5)
        x = 0.5 * _complex_unit(rng, 5)
        triple = top_singular_triplet(np.outer(h, x.conj()))
        assert abs(triple.sigma1 - 1.0) <= 1e-12
        assert abs(abs(np.vdot(triple.left, h)) - 2.0) <= 1e-10
        assert abs(abs(np.vdot(triple.right, x)) - 0.5) <= 1e-10

    def test_zero_matrix(self):
        """The zero matrix is flagged instead of raising."""
        triple = top_singular_triplet(np.zeros((4, 4), dtype=complex))
        assert triple.sigma1 == 0.0
        assert not triple.converged
        assert np.linalg.norm(triple.left) == 1.0

    def test_against_gram_oracle(self, rng):
        """sigma1 matches the square root of the top eigenvalue of M^H M."""
        M = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        triple = top_singular_triplet(M)
        oracle = np.sqrt(np.linalg.eigvalsh(M.conj().T @ M)[-1])
        assert abs(triple.sigma1 - oracle) <= 1e-8
        assert np.linalg.norm(M @ triple.right - triple.sigma1 * triple.left) <= 1e-8 * np.linalg.norm(M)

    def test_phase_convention(self, rng):
        M = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        left = top_singular_triplet(M).left
        k = int(np.argmax(np.abs(left)))
        assert left[k].imag == 0.0 and left[k].real > 0.0


class TestProcrustes:
    """Test orthogonal Procrustes alignment."""

    def test_identity(self, rng):
        X = rng.standard_normal((6, 3))
        result = procrustes_align(X, X)
        assert np.allclose(result.rotation, np.eye(3), atol=1e-10)
        assert result.residual <= 1e-10

    def test_rank_one_is_sign(self, rng):
        x = rng.standard_normal(7)
        result = procrustes_align(-x, x)
        assert np.allclose(result.rotation, [[-1.0]])

    def test_against_rotation_grid(self, rng):
        """r = 2: residual matches the best rotation or reflection on a 0.001-radian grid."""
        X = rng.standard_normal((5, 2))
        Xstar = rng.standard_normal((5, 2))
        theta = np.arange(0.0, 2.0 * np.pi, 1e-3)
        c, s = np.cos(theta), np.sin(theta)
        best = np.inf
        for flip in (1.0, -1.0):
            # Columns of X R for R = [[c, -s·flip], [s, c·flip]]
            first = np.outer(X[:, 0], c) + np.outer(X[:, 1], s)
            second = flip * (np.outer(X[:, 0], -s) + np.outer(X[:, 1], c))
            residual = np.sqrt(
                np.sum((first - Xstar[:, [0]]) ** 2, axis=0) + np.sum((second - Xstar[:, [1]]) ** 2, axis=0)
            )
            best = min(best, float(residual.min()))
        result = procrustes_align(X, Xstar)
        assert abs(result.residual - best) <= 1e-5
        assert np.allclose(result.rotation.T @ result.rotation, np.eye(2), atol=1e-10)

    def test_certificate(self, rng):
        """H^T X^T X* is symmetric positive semidefinite."""
        X = rng.standard_normal((9, 4))
        Xstar = rng.standard_normal((9, 4))
        H = procrustes_align(X, Xstar).rotation
        S = H.T @ X.T @ Xstar
        assert np.allclose(S, S.T, atol=1e-8)
        assert np.linalg.eigvalsh(0.5 * (S + S.T))[0] >= -1e-8

    def test_rank_deficient_flagged(self, rng):
        X = rng.standard_normal((6, 2))
        X[:, 1] = 0.0
        result = procrustes_align(X, rng.standard_normal((6, 2)))
        assert result.degenerate

    def test_shape_mismatch(self, rng):
        with pytest.raises(InvalidArgumentError):
            procrustes_align(rng.standard_normal((4, 2)), rng.standard_normal((4, 3)))


class TestScalarAlign:
    """Test the complex scalar alignment solver."""

    def test_truth(self, rng):
        h, x = _complex_unit(rng, 8), _complex_unit(rng, 8)
        solution = scalar_align(h, x, h, x)
        assert abs(solution.alpha - 1.0) <= 1e-10
        assert solution.objective <= 1e-20

    @pytest.mark.parametrize('alpha0', [1.5 - 0.5j, 0.3 + 0.2j, -2.0 + 1.0j])
    def test_exact_scaling(self, rng, alpha0):
        """(conj(α0) h*, x*/α0) aligns back with α̂ = α0 and g = 0."""
        hstar, xstar = _complex_unit(rng, 8), _complex_unit(rng, 8)
        solution = scalar_align(np.conj(alpha0) * hstar, xstar / alpha0, hstar, xstar)
        assert abs(solution.alpha - alpha0) <= 1e-6
        assert solution.objective <= 1e-12

    def test_against_grid_oracle(self, rng):
        """Perturbed truth, K = 10: α̂ agrees with a zooming grid search to 1e-4."""
        hstar, xstar = _complex_unit(rng, 10), _complex_unit(rng, 10)
        h = 1.2 * hstar + 0.1 * _complex_unit(rng, 10)
        x = (0.8 + 0.1j) * xstar + 0.1 * _complex_unit(rng, 10)

        def g(alpha):
            return alignment_objective(alpha, h, x, hstar, xstar)

        moduli = np.geomspace(1.0 / 8.0, 8.0, 100)
        phases = np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 180, endpoint=False))
        coarse = [m * ph for m in moduli for ph in phases]
        center = min(coarse, key=g)
        span = 0.2
        for _ in range(14):
            offsets = np.linspace(-span, span, 21)
            candidates = [center + a + 1j * b for a in offsets for b in offsets]
            center = min(candidates, key=g)
            span /= 2.0

        solution = scalar_align(h, x, hstar, xstar)
        assert abs(solution.alpha - center) <= 1e-4
        assert solution.objective <= g(1.0)

    def test_stationarity_and_certificate(self, rng):
        hstar, xstar = _complex_unit(rng, 10), _complex_unit(rng, 10)
        h = hstar + 0.05 * _complex_unit(rng, 10)
        x = xstar + 0.05 * _complex_unit(rng, 10)
        solution = scalar_align(h, x, hstar, xstar)
        assert solution.converged
        assert np.sqrt(2.0) * abs(alignment_gradient(solution.alpha, h, x, hstar, xstar)) <= 1e-8
        assert alignment_certificate_gap(solution.alpha, h, x, hstar, xstar) <= 1e-8

    def test_zero_input_rejected(self, rng):
        hstar, xstar = _complex_unit(rng, 4), _complex_unit(rng, 4)
        with pytest.raises(InvalidArgumentError):
            scalar_align(np.zeros(4), xstar, hstar, xstar)

    def test_overflowing_inputs_raise_numeric_failure(self, rng):
        """Iterates of order 1e200 overflow the inner products; the solver reports a numeric failure."""
        hstar, xstar = _complex_unit(rng, 6), _complex_unit(rng, 6)
        with pytest.raises(NumericFailureError):
            scalar_align(1e200 * hstar, 1e200 * xstar, hstar, xstar)

    def test_large_finite_inputs_stay_finite(self, rng):
        hstar, xstar = _complex_unit(rng, 6), _complex_unit(rng, 6)
        solution = scalar_align(1e6 * hstar, 1e6 * xstar, hstar, xstar)
        assert np.isfinite(solution.objective)


class TestPowerIteration:
    """Test the matrix-free norm estimate."""

    def test_diagonal_operator(self, rng):
        d = np.array([5.0, -1.0, 2.0, 0.5])
        estimate = power_iteration(lambda v: d * v, 4, rng, maxiter=500, rtol=1e-10)
        assert abs(estimate - 5.0) <= 1e-6

    def test_zero_operator(self, rng):
        assert power_iteration(lambda v: 0.0 * v, 3, rng) == 0.0
