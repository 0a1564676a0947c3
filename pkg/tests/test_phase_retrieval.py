"""
Tests for Wirtinger flow phase retrieval.
"""

import numpy as np
import pytest

from estimators import (
    pr_dist,
    pr_gradient,
    pr_hessian_apply,
    pr_hessian_quadform,
    pr_incoherence,
    pr_loss,
    pr_run,
    pr_spectral_init,
)
from estimators.phase_retrieval import MEASUREMENT_FLOOR, pr_spectral_from_matrix, pr_spectral_matrix
from models import PhaseRetrievalInstance, PrConfig, RngSeed
from utils.ensembles import gen_phase_retrieval
from utils.errors import InvalidArgumentError, NumericFailureError
from utils.helpers import RNG


class TestLossAndDerivatives:
    """Test the phase retrieval loss, gradient and Hessian."""

    def test_loss_vanishes_at_both_signs(self, pr_instance):
        assert pr_loss(pr_instance, pr_instance.truth) <= 1e-20
        assert pr_loss(pr_instance, -pr_instance.truth) <= 1e-20

    def test_loss_matches_per_term_sum(self, seed):
        """n = 3, m = 5: vectorized loss equals the per-term sum."""
        inst = gen_phase_retrieval(3, 5, seed)
        x = np.array([0.3, -0.7, 1.1])
        expected = sum(((inst.designs[j] @ x) ** 2 - inst.measurements[j]) ** 2 for j in range(5)) / (4 * 5)
        assert abs(pr_loss(inst, x) - expected) <= 1e-12 * max(1.0, expected)

    def test_gradient_zero_at_truth(self, pr_instance):
        assert np.max(np.abs(pr_gradient(pr_instance, pr_instance.truth))) <= 1e-12

    def test_gradient_finite_differences(self, pr_instance):
        """Central differences with step 1e-5 agree to 1e-6 relative."""
        rng = RNG.generator(RngSeed(master_seed=1))
        x = RNG.unit_sphere(rng, pr_instance.n)
        step = 1e-5
        fd = np.array([
            (pr_loss(pr_instance, x + step * e) - pr_loss(pr_instance, x - step * e)) / (2 * step)
            for e in np.eye(pr_instance.n)
        ])
        grad = pr_gradient(pr_instance, x)
        assert np.linalg.norm(fd - grad) <= 1e-6 * np.linalg.norm(grad)

    def test_gradient_hand_expansion(self):
        """n = 2, m = 3 instance with hand-computed gradient."""
        designs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        inst = PhaseRetrievalInstance(designs=designs, measurements=np.array([1.0, 4.0, 9.0]))
        x = np.array([2.0, 1.0])
        # a^T x = (2, 1, 3); residuals (3, -3, 0)
        expected = (3 * 2 * np.array([1.0, 0.0]) + (-3) * 1 * np.array([0.0, 1.0])) / 3
        assert np.allclose(pr_gradient(inst, x), expected)

    def test_hessian_zero_probe(self, pr_instance):
        assert pr_hessian_quadform(pr_instance, pr_instance.truth, np.zeros(pr_instance.n)) == 0.0

    def test_hessian_matches_gradient_differences(self, pr_instance):
        rng = RNG.generator(RngSeed(master_seed=2))
        x = RNG.unit_sphere(rng, pr_instance.n)
        v = RNG.unit_sphere(rng, pr_instance.n)
        step = 1e-5
        fd = (pr_gradient(pr_instance, x + step * v) - pr_gradient(pr_instance, x - step * v)) / (2 * step)
        quad = pr_hessian_quadform(pr_instance, x, v)
        assert abs(v @ fd - quad) <= 1e-5 * abs(quad)
        assert np.allclose(pr_hessian_apply(pr_instance, x, v), fd, rtol=1e-5, atol=1e-7)

    def test_population_curvature(self):
        """At x*, with many samples, unit-direction curvature lies in [1, 10]."""
        inst = gen_phase_retrieval(10, 20000, RngSeed(master_seed=3))
        rng = RNG.generator(RngSeed(master_seed=4))
        for _ in range(20):
            v = RNG.unit_sphere(rng, 10)
            assert 1.0 <= pr_hessian_quadform(inst, inst.truth, v) <= 10.0

    def test_dimension_mismatch(self, pr_instance):
        with pytest.raises(InvalidArgumentError):
            pr_loss(pr_instance, np.zeros(pr_instance.n + 1))


class TestSpectralInit:
    """Test the spectral initialization."""

    def test_population_matrix(self, seed):
        """Y = I + 2 x* x*^T yields ±x* exactly."""
        xstar = RNG.unit_sphere(RNG.generator(seed), 8)
        x0 = pr_spectral_from_matrix(np.eye(8) + 2.0 * np.outer(xstar, xstar))
        assert abs(np.linalg.norm(x0) - 1.0) <= 1e-12
        assert pr_dist(x0, xstar) <= 1e-10

    def test_non_positive_spectrum(self):
        with pytest.raises(NumericFailureError):
            pr_spectral_from_matrix(-np.eye(3))

    def test_accuracy_across_seeds(self):
        """n = 100, m = 1000: dist(x0, x*) <= 0.5 in at least 19 of 20 seeds."""
        good = sum(
            pr_dist(pr_spectral_init(inst), inst.truth) <= 0.5
            for inst in (gen_phase_retrieval(100, 1000, RngSeed(master_seed=9, stream_index=i)) for i in range(20))
        )
        assert good >= 19

    def test_plain_rule_uses_eigenvalue_scaling(self, pr_instance):
        Y = pr_spectral_matrix(pr_instance, 'plain')
        expected = Y.copy()
        for a, y in zip(pr_instance.designs, pr_instance.measurements):
            expected -= y * np.outer(a, a) / pr_instance.m
        assert np.max(np.abs(expected)) <= 1e-12
        assert np.array_equal(pr_spectral_init(pr_instance, 'plain'), pr_spectral_from_matrix(Y))

    def test_optimal_weights_match_per_sample_sum(self, pr_instance):
        """``(1/m) Σ_j (1 - ȳ/y_j) a_j a_j^T`` against a loop over the samples."""
        ybar = float(np.mean(pr_instance.measurements))
        expected = np.zeros((pr_instance.n, pr_instance.n))
        for a, y in zip(pr_instance.designs, pr_instance.measurements):
            weight = 1.0 - ybar / max(y, MEASUREMENT_FLOOR * ybar)
            expected += weight * np.outer(a, a) / pr_instance.m
        assert np.allclose(pr_spectral_matrix(pr_instance, 'optimal'), expected, rtol=1e-10, atol=1e-10)

    def test_optimal_norm_is_root_mean_measurement(self, pr_instance):
        x0 = pr_spectral_init(pr_instance, 'optimal')
        assert abs(np.linalg.norm(x0) - np.sqrt(np.mean(pr_instance.measurements))) <= 1e-12

    def test_optimal_beats_plain_on_average(self):
        """Mean distance over 10 seeds at n = 100, m = 1000 drops with the optimal preprocessing."""
        plain, optimal = [], []
        for i in range(10):
            inst = gen_phase_retrieval(100, 1000, RngSeed(master_seed=9, stream_index=i))
            plain.append(pr_dist(pr_spectral_init(inst, 'plain'), inst.truth))
            optimal.append(pr_dist(pr_spectral_init(inst, 'optimal'), inst.truth))
        assert np.mean(optimal) < np.mean(plain)

    def test_zero_measurements_rejected(self):
        inst = PhaseRetrievalInstance(designs=np.eye(3), measurements=np.zeros(3))
        with pytest.raises(NumericFailureError):
            pr_spectral_init(inst, 'optimal')

    def test_unknown_preprocessing_rejected(self, pr_instance):
        with pytest.raises(InvalidArgumentError):
            pr_spectral_matrix(pr_instance, 'truncated')

    def test_determinism(self, pr_instance):
        assert np.array_equal(pr_spectral_init(pr_instance), pr_spectral_init(pr_instance))


class TestDistance:
    """Test the sign-invariant distance."""

    def test_values(self):
        xstar = np.array([0.6, 0.8])
        assert pr_dist(xstar, xstar) == 0.0
        assert pr_dist(-xstar, xstar) == 0.0
        assert abs(pr_dist(2.0 * xstar, xstar) - 1.0) <= 1e-15


class TestSignSymmetry:
    """Test that x and -x are indistinguishable to the loss and the solver."""

    def test_loss_even_and_gradient_odd(self, pr_instance):
        rng = RNG.generator(RngSeed(master_seed=5))
        for _ in range(5):
            x = RNG.unit_sphere(rng, pr_instance.n) * (0.5 + rng.random())
            assert pr_loss(pr_instance, -x) == pytest.approx(pr_loss(pr_instance, x), rel=1e-14)
            assert np.allclose(pr_gradient(pr_instance, -x), -pr_gradient(pr_instance, x), rtol=1e-12, atol=1e-12)

    def test_trajectory_from_negated_start_is_mirrored(self, pr_instance):
        config = PrConfig(eta=0.1, max_iters=30, tol_rel=0.0, keep_iterates=True)
        x0 = pr_spectral_init(pr_instance)
        forward = pr_run(pr_instance, config, x0=x0)
        mirrored = pr_run(pr_instance, config, x0=-x0)
        for x, y in zip(forward.iterates, mirrored.iterates):
            assert np.allclose(y, -x, rtol=0.0, atol=1e-12)
        assert [r.dist for r in mirrored.records] == pytest.approx([r.dist for r in forward.records], abs=1e-12)


class TestWirtingerFlow:
    """Test the gradient descent loop."""

    def test_converges_within_budget(self):
        """n = 100, m = 1000, η = 0.1 reaches 1e-5 relative distance within 200 iterations for most seeds."""
        successes = 0
        for i in range(5):
            inst = gen_phase_retrieval(100, 1000, RngSeed(master_seed=0, stream_index=i))
            trajectory = pr_run(inst, PrConfig(eta=0.1, max_iters=200, tol_rel=1e-5))
            if trajectory.converged:
                assert trajectory.stop_reason == 'tolerance'
                assert trajectory.records[-1].rel_dist <= 1e-5
                successes += 1
        assert successes >= 4

    def test_incoherence_stays_bounded(self):
        inst = gen_phase_retrieval(100, 1000, RngSeed(master_seed=1))
        trajectory = pr_run(inst, PrConfig(eta=0.1, max_iters=1000))
        later = [r.incoherence_diff for r in trajectory.records if r.iteration > 1]
        assert max(later) <= 3.0
        assert np.isfinite(trajectory.records[0].incoherence_raw)

    def test_zero_step_is_constant(self, pr_instance):
        trajectory = pr_run(pr_instance, PrConfig(eta=0.0, max_iters=5, keep_iterates=True))
        assert trajectory.iterations == 5
        assert all(np.array_equal(x, trajectory.initial) for x in trajectory.iterates)

    def test_record_every(self, pr_instance):
        trajectory = pr_run(pr_instance, PrConfig(eta=0.1, max_iters=10, tol_rel=0.0, record_every=4))
        assert trajectory.recorded_iterations == [0, 4, 8, 10]

    def test_divergence_raises_with_last_state(self, pr_instance):
        with pytest.raises(NumericFailureError) as info:
            pr_run(pr_instance, PrConfig(eta=1e6, max_iters=50))
        assert info.value.iteration is not None
        assert np.all(np.isfinite(info.value.last_state))

    def test_without_truth_uses_gradient_stop(self, pr_instance):
        blind = PhaseRetrievalInstance(designs=pr_instance.designs, measurements=pr_instance.measurements)
        trajectory = pr_run(blind, PrConfig(eta=0.1, max_iters=2000, grad_tol=1e-9))
        assert trajectory.stop_reason == 'gradient'
        assert pr_dist(trajectory.final, pr_instance.truth) <= 1e-6

    def test_incoherence_without_truth_is_nan(self, pr_instance):
        blind = PhaseRetrievalInstance(designs=pr_instance.designs, measurements=pr_instance.measurements)
        raw, diff = pr_incoherence(blind, np.ones(pr_instance.n))
        assert np.isnan(raw) and np.isnan(diff)
