import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddlescope.analysis.regions import (
    AssumptionError,
    ClassifierParams,
    RegionLabel,
    classify,
    classify_points,
    compute_constants,
    lambda_min,
    saddle_noise_floor,
    spectral_split,
)
from saddlescope.problems import QuadraticModel, TwoLayerLogisticModel

SADDLE = QuadraticModel((1.0, -1.0))
BOWL = QuadraticModel((1.0, 1.0))
BASE = ClassifierParams(step_size=0.01, delta=1.0, beta=0.0, sigma_sq=1.0, tau=0.1, pi=0.5)


class TestConstants:
    def test_hand_arithmetic(self):
        c1, c2, g = compute_constants(BASE)
        assert c1 == pytest.approx(0.995, abs=1e-15)
        assert c2 == pytest.approx(0.5, abs=1e-15)
        assert g == pytest.approx(0.01 * (0.5 / 0.995) * 3, rel=1e-14)
        assert g == pytest.approx(0.015075, abs=1e-6)

    def test_zero_step(self):
        c1, _, g = compute_constants(BASE.with_step_size(0.0))
        assert c1 == 1.0 and g == 0.0

    def test_premise_boundary(self):
        p = ClassifierParams(0.5, 1.0, beta=np.sqrt(3.0))
        assert p.c1 == pytest.approx(0.0, abs=1e-15)
        assert p.premise_holds
        assert np.isinf(ClassifierParams(1.0, 1.0, beta=2.0).g_threshold)

    @pytest.mark.parametrize("pi", [0.0, 1.0, -0.2, 1.5])
    def test_pi_range(self, pi):
        with pytest.raises(ValueError):
            ClassifierParams(0.01, 1.0, pi=pi)

    def test_tau_positive(self):
        with pytest.raises(ValueError):
            ClassifierParams(0.01, 1.0, tau=0.0)

    @given(st.floats(1e-4, 0.1), st.floats(0.1, 10), st.floats(0, 2), st.floats(0.01, 5), st.floats(0.05, 0.95))
    def test_invariants(self, mu, delta, beta, sigma_sq, pi):
        p = ClassifierParams(mu, delta, beta, sigma_sq, 0.1, pi)
        if p.premise_holds:
            assert 0.0 <= p.c1 <= 1.0
            assert p.g_threshold > 0
        assert p.c2 >= 0


class TestClassify:
    def test_examples(self):
        assert classify([1.0, 0.0], SADDLE, BASE) is RegionLabel.G
        assert classify([0.0, 0.0], SADDLE, BASE) is RegionLabel.H
        assert classify([0.0, 0.0], BOWL, BASE) is RegionLabel.M

    def test_logistic_origin(self):
        m = TwoLayerLogisticModel()
        assert lambda_min(m, np.zeros(2)) == pytest.approx(-0.4, abs=1e-12)
        assert classify([0.0, 0.0], m, BASE) is RegionLabel.H

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=20))
    def test_partition(self, pts):
        m = TwoLayerLogisticModel()
        W = np.array(pts)
        labels = classify_points(m, W, BASE)
        g = m.grad(W)
        in_g = np.sum(g * g, axis=1) >= BASE.g_threshold
        in_h = ~in_g & (lambda_min(m, W) <= -BASE.tau)
        expected = np.where(in_g, "G", np.where(in_h, "H", "M"))
        np.testing.assert_array_equal(labels, expected)
        assert set(labels) <= {"G", "H", "M"}

    def test_vectorized_matches_scalar(self):
        m = TwoLayerLogisticModel()
        W = np.random.default_rng(0).uniform(-2, 2, (50, 2))
        labels = classify_points(m, W, BASE)
        assert [classify(w, m, BASE).value for w in W] == labels.tolist()

    def test_non_finite(self):
        with pytest.raises(ValueError):
            classify([np.nan, 0.0], SADDLE, BASE)


class TestSpectralSplit:
    def test_descending_and_signs(self):
        split = spectral_split(np.array([[0.1, -0.5], [-0.5, 0.1]]))
        np.testing.assert_allclose(split.eigvals, [0.6, -0.4], atol=1e-15)
        np.testing.assert_allclose(split.basis_neg[:, 0], [1 / np.sqrt(2)] * 2, atol=1e-15)
        np.testing.assert_allclose(split.basis_nonneg[:, 0], [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-15)

    @settings(max_examples=50)
    @given(st.lists(st.floats(-5, 5), min_size=9, max_size=9))
    def test_reassembly(self, entries):
        A = np.array(entries).reshape(3, 3)
        H = A + A.T
        split = spectral_split(H)
        np.testing.assert_allclose(split.reassemble(), H, atol=1e-10)
        V = split.basis
        np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-10)
        assert np.all(split.eigvals_nonneg >= 0) and np.all(split.eigvals_neg < 0)
        assert np.all(np.diff(split.eigvals) <= 0)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            spectral_split(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_noise_floor(self):
        split = spectral_split(np.diag([1.0, -1.0]))
        assert saddle_noise_floor(np.diag([2.0, 3.0]), split) == pytest.approx(3.0)
        assert saddle_noise_floor(np.diag([2.0, 0.0]), split) == 0.0
        with pytest.raises(AssumptionError):
            saddle_noise_floor(np.eye(2), spectral_split(np.eye(2)))

    def test_targeted_noise_covers_logistic_saddle(self):
        m = TwoLayerLogisticModel()
        split = spectral_split(m.hessian(np.zeros(2)))
        d = np.array([1.0, 1.0]) / np.sqrt(2)
        assert saddle_noise_floor(np.outer(d, d), split) == pytest.approx(1.0)
        e = np.array([1.0, -1.0]) / np.sqrt(2)
        assert saddle_noise_floor(np.outer(e, e), split) == pytest.approx(0.0, abs=1e-15)
