"""
Tests for gradient descent matrix completion and its baselines.
"""

import numpy as np
import pytest
import scipy.linalg

from estimators import (
    mc_clean_hessian_quadform,
    mc_error_report,
    mc_gradient,
    mc_incoherence_param,
    mc_loo_bound,
    mc_loss,
    mc_run,
    mc_snr,
    mc_spectral_init,
    mc_spectrum_diagnostics,
    project_l,
    project_omega,
    project_omega_l,
    project_omega_minus_l,
)
from estimators.matrix_completion import mc_clean_gradient, mc_clean_hessian_apply, mc_spectral_from_matrix
from models import McConfig, RngSeed
from utils.ensembles import gen_matrix_completion
from utils.errors import InvalidArgumentError, NumericFailureError
from utils.helpers import RNG
from utils.numlin import procrustes_align


def _orthogonal(rng, r):
    Q, _ = scipy.linalg.qr(rng.standard_normal((r, r)))
    return Q


@pytest.fixture()
def rng():
    return RNG.generator(RngSeed(master_seed=31))


class TestProjections:
    """Test the sampling projections against entrywise loops."""

    def test_loop_oracle(self, mc_instance, rng):
        n = mc_instance.n
        M = rng.standard_normal((n, n))
        l = 5
        omega = np.zeros((n, n))
        line = np.zeros((n, n))
        rest = np.zeros((n, n))
        for j in range(n):
            for k in range(n):
                if not mc_instance.mask[j, k]:
                    continue
                omega[j, k] = M[j, k]
                if j == l or k == l:
                    line[j, k] = M[j, k]
                else:
                    rest[j, k] = M[j, k]
        assert np.array_equal(project_omega(mc_instance, M), omega)
        assert np.array_equal(project_omega_l(mc_instance, M, l), line)
        assert np.array_equal(project_omega_minus_l(mc_instance, M, l), rest)

    def test_partition(self, mc_instance, rng):
        """P_Ω = P_{Ω_l} + P_{Ω^{-l}} for every l."""
        M = rng.standard_normal((mc_instance.n, mc_instance.n))
        full = project_omega(mc_instance, M)
        for l in (0, 17, mc_instance.n - 1):
            assert np.array_equal(project_omega_l(mc_instance, M, l) + project_omega_minus_l(mc_instance, M, l), full)

    def test_omega_projection_is_idempotent(self, mc_instance, rng):
        M = rng.standard_normal((mc_instance.n, mc_instance.n))
        once = project_omega(mc_instance, M)
        assert np.array_equal(project_omega(mc_instance, once), once)

    def test_line_projection_ignores_mask(self):
        kept = project_l(np.ones((6, 6)), 2)
        assert kept.sum() == 2 * 6 - 1
        assert np.all(kept[2] == 1.0) and np.all(kept[:, 2] == 1.0)

    def test_index_out_of_range(self, mc_instance):
        with pytest.raises(InvalidArgumentError):
            project_omega_l(mc_instance, np.zeros((mc_instance.n, mc_instance.n)), mc_instance.n)


class TestLossAndDerivatives:
    """Test the loss, gradient and clean Hessian."""

    def test_loss_matches_masked_frobenius(self, mc_instance, rng):
        X = rng.standard_normal((mc_instance.n, mc_instance.r))
        residual = project_omega(mc_instance, X @ X.T - mc_instance.observed)
        expected = np.sum(residual**2) / (4.0 * mc_instance.p)
        assert abs(mc_loss(mc_instance, X) - expected) <= 1e-10 * expected

    def test_rotation_invariance(self, mc_instance, rng):
        X = rng.standard_normal((mc_instance.n, mc_instance.r))
        Q = _orthogonal(rng, mc_instance.r)
        assert abs(mc_loss(mc_instance, X @ Q) - mc_loss(mc_instance, X)) <= 1e-10 * mc_loss(mc_instance, X)

    def test_gradient_equivariance(self, mc_instance, rng):
        X = rng.standard_normal((mc_instance.n, mc_instance.r))
        Q = _orthogonal(rng, mc_instance.r)
        assert np.allclose(mc_gradient(mc_instance, X @ Q), mc_gradient(mc_instance, X) @ Q, atol=1e-10)

    def test_gradient_zero_at_truth(self, mc_instance):
        assert np.max(np.abs(mc_gradient(mc_instance, mc_instance.truth_factor))) <= 1e-12

    def test_gradient_finite_differences(self, mc_instance, rng):
        X = 0.3 * rng.standard_normal((mc_instance.n, mc_instance.r))
        step = 1e-5
        fd = np.zeros_like(X)
        for j in range(X.shape[0]):
            for k in range(X.shape[1]):
                E = np.zeros_like(X)
                E[j, k] = step
                fd[j, k] = (mc_loss(mc_instance, X + E) - mc_loss(mc_instance, X - E)) / (2 * step)
        grad = mc_gradient(mc_instance, X)
        assert np.linalg.norm(fd - grad) <= 1e-6 * np.linalg.norm(grad)

    def test_clean_hessian_matches_gradient_differences(self, noisy_mc_instance, rng):
        inst = noisy_mc_instance
        X = inst.truth_factor + 0.1 * rng.standard_normal((inst.n, inst.r))
        V = rng.standard_normal((inst.n, inst.r))
        step = 1e-5
        fd = (mc_clean_gradient(inst, X + step * V) - mc_clean_gradient(inst, X - step * V)) / (2 * step)
        quad = mc_clean_hessian_quadform(inst, X, V)
        assert abs(np.sum(V * fd) - quad) <= 1e-6 * abs(quad)
        assert np.allclose(mc_clean_hessian_apply(inst, X, V), fd, rtol=1e-5, atol=1e-7)

    def test_clean_hessian_at_truth_is_nonnegative(self, mc_instance, rng):
        for _ in range(5):
            V = rng.standard_normal((mc_instance.n, mc_instance.r))
            assert mc_clean_hessian_quadform(mc_instance, mc_instance.truth_factor, V) >= 0.0

    def test_factor_shape_checked(self, mc_instance):
        with pytest.raises(InvalidArgumentError):
            mc_loss(mc_instance, np.zeros((mc_instance.n, mc_instance.r + 1)))


class TestSpectralInit:
    """Test the rank-r spectral initialization."""

    def test_full_observation_reconstructs_truth(self, seed):
        inst = gen_matrix_completion(12, 3, 1.0, 0.0, seed, spectrum=[3.0, 2.0, 1.0])
        X0 = mc_spectral_init(inst)
        assert np.allclose(X0 @ X0.T, inst.truth_matrix, atol=1e-10)

    def test_non_positive_eigenvalue_fails(self):
        with pytest.raises(NumericFailureError):
            mc_spectral_from_matrix(np.diag([1.0, -1.0, -2.0]), 2)

    def test_accuracy_across_seeds(self):
        """n = 500, r = 5, p = 0.2: relative factor error at most 0.5 on at least 19 of 20 instances."""
        hits = 0
        for stream in range(20):
            inst = gen_matrix_completion(500, 5, 0.2, 0.0, RngSeed(master_seed=17, stream_index=stream))
            residual = procrustes_align(mc_spectral_init(inst), inst.truth_factor).residual
            hits += residual / np.linalg.norm(inst.truth_factor) <= 0.5
        assert hits >= 19


class TestMetrics:
    """Test the error report and the instance diagnostics."""

    def test_report_vanishes_at_rotated_truth(self, mc_instance, rng):
        Q = _orthogonal(rng, mc_instance.r)
        report = mc_error_report(mc_instance, mc_instance.truth_factor @ Q)
        for name in ('err_fro', 'err_op', 'err_2inf', 'err_entrywise', 'mat_err_fro', 'mat_err_op'):
            assert report[name] <= 1e-10, name

    def test_matrix_errors_match_dense(self, mc_instance, rng):
        X = mc_instance.truth_factor + 0.05 * rng.standard_normal((mc_instance.n, mc_instance.r))
        report = mc_error_report(mc_instance, X)
        diff = X @ X.T - mc_instance.truth_matrix
        expected_fro = np.linalg.norm(diff) / np.linalg.norm(mc_instance.truth_matrix)
        expected_op = np.linalg.norm(diff, 2) / np.linalg.norm(mc_instance.truth_matrix, 2)
        assert abs(report['mat_err_fro'] - expected_fro) <= 1e-10
        assert abs(report['mat_err_op'] - expected_op) <= 1e-10

    def test_incoherence_extremes(self):
        """Coordinate columns are maximally coherent, Hadamard columns minimally."""
        assert abs(mc_incoherence_param(np.eye(8)[:, :2]) - 4.0) <= 1e-12
        assert abs(mc_incoherence_param(scipy.linalg.hadamard(8)[:, :2].astype(float)) - 1.0) <= 1e-12

    def test_incoherence_rejects_rank_deficient(self):
        with pytest.raises(InvalidArgumentError):
            mc_incoherence_param(np.zeros((5, 2)))

    def test_spectrum_diagnostics(self, seed):
        inst = gen_matrix_completion(20, 3, 0.5, 0.0, seed, spectrum=[4.0, 2.0, 1.0])
        diagnostics = mc_spectrum_diagnostics(inst)
        assert abs(diagnostics['kappa'] - 4.0) <= 1e-10
        assert abs(diagnostics['step_bound'] - 2.0 / (25.0 * 4.0 * 4.0)) <= 1e-12

    def test_snr(self, mc_instance, noisy_mc_instance):
        assert mc_snr(mc_instance) == float('inf')
        signal = noisy_mc_instance.truth_matrix[noisy_mc_instance.mask]
        expected = np.sum(signal**2) / (signal.size * 1e-6)
        assert abs(mc_snr(noisy_mc_instance) - expected) <= 1e-8 * expected

    def test_loo_bound_grows_with_noise(self, mc_instance, noisy_mc_instance):
        assert 0.0 < mc_loo_bound(mc_instance) < mc_loo_bound(noisy_mc_instance)


class TestGradientDescent:
    """Test the vanilla solver and the two baselines."""

    def test_noiseless_convergence(self, mc_instance):
        trajectory = mc_run(mc_instance, McConfig(eta=0.2, max_iters=1000, tol_rel=1e-6))
        assert trajectory.converged
        final = trajectory.records[-1]
        assert final.err_fro <= 1e-6
        assert final.err_entrywise <= 1e-4

    def test_noisy_error_tracks_noise(self, noisy_mc_instance):
        trajectory = mc_run(noisy_mc_instance, McConfig(eta=0.2, max_iters=300, tol_rel=0.0))
        assert trajectory.stop_reason == 'max_iters'
        assert trajectory.records[-1].err_fro <= 0.05

    def test_error_floor_grows_with_noise(self, seed):
        """Same mask and noise direction: the final error increases with sigma."""
        config = McConfig(eta=0.2, max_iters=300, tol_rel=0.0)
        finals = []
        for sigma in (1e-4, 1e-3, 1e-2):
            trajectory = mc_run(gen_matrix_completion(100, 2, 0.3, sigma, seed), config)
            finals.append(trajectory.records[-1].err_fro)
        assert all(np.isfinite(finals))
        assert finals[0] < finals[1] < finals[2]

    def test_zero_step_is_constant(self, mc_instance):
        trajectory = mc_run(mc_instance, McConfig(eta=0.0, max_iters=4, keep_iterates=True))
        assert trajectory.iterations == 4
        assert all(np.array_equal(X, trajectory.initial) for X in trajectory.iterates)

    def test_projected_with_loose_radius_matches_vanilla(self, mc_instance):
        config = McConfig(eta=0.2, max_iters=30, tol_rel=0.0)
        vanilla = mc_run(mc_instance, config)
        projected = mc_run(mc_instance, config.model_copy(update={'baseline': 'projected', 'projection_radius': 1e6}))
        assert projected.baseline == 'projected'
        assert np.array_equal(vanilla.final, projected.final)

    def test_projected_rows_stay_in_ball(self, mc_instance):
        radius = 0.2
        trajectory = mc_run(
            mc_instance,
            McConfig(eta=0.2, max_iters=10, tol_rel=0.0, baseline='projected', projection_radius=radius),
        )
        assert np.max(np.linalg.norm(trajectory.final, axis=1)) <= radius * (1.0 + 1e-12)

    def test_regularized_without_penalty_matches_vanilla(self, mc_instance):
        config = McConfig(eta=0.2, max_iters=30, tol_rel=0.0)
        vanilla = mc_run(mc_instance, config)
        regularized = mc_run(mc_instance, config.model_copy(update={'baseline': 'regularized', 'reg_lambda': 0.0}))
        assert np.allclose(vanilla.final, regularized.final, atol=1e-14)

    def test_matrix_stop_metric(self, mc_instance):
        trajectory = mc_run(mc_instance, McConfig(eta=0.2, max_iters=1000, tol_rel=1e-5, stop_metric='mat_err_fro'))
        assert trajectory.converged
        assert trajectory.records[-1].mat_err_fro <= 1e-5
