import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multisol.confusion import (
    _membership_pass,
    _membership_reference,
    hard_confusions,
    mc_hard_membership,
    mc_hard_memberships,
    smoothed_membership,
    smoothed_memberships,
    soft_confusions,
)
from multisol.dirichlet import DirichletPrior, ThresholdSet, hoeffding_samples, sample_thresholds
from multisol.simplex import barycenter, classify, margin_matrix, vertex


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def uniform_set(m, n, seed=0):
    return sample_thresholds(DirichletPrior.symmetric(1, m), n, seed)


class TestHardConfusions:
    def test_perfect_classifier(self):
        labels = np.array([0, 1, 2, 2, 1, 0, 0])
        preds = np.eye(3)[labels]
        for j, cm in enumerate(hard_confusions(preds, labels, barycenter(3))):
            count = int(np.sum(labels == j))
            assert (cm.tp, cm.fp, cm.fn, cm.tn) == (count, 0, 0, 7 - count)

    def test_shifted_threshold(self):
        # (0.5,0.3,0.2): 0.5-0.3 > 1/8-3/4 and 0.5-0.2 > 0, so region 0 (a true positive for class 0)
        # (0.2,0.5,0.3): region 2, a false positive for class 2
        tau = (1 / 8, 3 / 4, 1 / 8)
        assert classify((0.5, 0.3, 0.2), tau).label == 0
        cms = hard_confusions([(0.5, 0.3, 0.2), (0.2, 0.5, 0.3)], [0, 1], tau)
        assert (cms[2].tp, cms[2].fp, cms[2].fn, cms[2].tn) == (0, 1, 0, 1)
        assert (cms[0].tp, cms[0].fp, cms[0].fn, cms[0].tn) == (1, 0, 0, 1)
        assert (cms[1].tp, cms[1].fp, cms[1].fn, cms[1].tn) == (0, 0, 1, 1)

    def test_binary_single_sample(self):
        cm = hard_confusions([(0.7, 0.3)], [0], (0.5, 0.5))[0]
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (1, 0, 0, 0)

    def test_errors(self):
        with pytest.raises(ValueError):
            hard_confusions(np.empty((0, 3)), [], barycenter(3))
        with pytest.raises(ValueError):
            hard_confusions([(0.5, 0.5)], [0], barycenter(3))
        with pytest.raises(ValueError):
            hard_confusions([(0.5, 0.5)], [0, 1], barycenter(2))


class TestSmoothedMembership:
    def test_threshold_equal_to_prediction(self):
        p = np.array([0.2, 0.5, 0.3])
        for lam in (0.1, 10, 1000):
            np.testing.assert_allclose(smoothed_membership(p, p, lam), 0.25, rtol=0, atol=1e-15)

    def test_hand_value(self):
        got = smoothed_membership((0.5, 0.3, 0.2), barycenter(3).values, 10)
        expected = sig(2) * sig(3)
        assert math.isclose(got[0], expected, rel_tol=1e-12)
        assert abs(got[0] - 0.839030) < 1e-5
        assert math.isclose(got[1], sig(-2) * sig(1), rel_tol=1e-12)

    def test_binary_matches_uniform_cdf(self):
        n = hoeffding_samples(0.01, 0.01)
        ts = uniform_set(2, n)
        assert abs(smoothed_membership((0.7, 0.3), ts, 1e4)[0] - 0.7) < 0.02

    def test_tiny_steepness(self):
        ts = uniform_set(3, 256)
        np.testing.assert_allclose(smoothed_memberships(np.random.default_rng(0).dirichlet(np.ones(3), 5), ts, 1e-9), 0.25, atol=1e-9)

    def test_kernel_matches_direct_evaluation(self):
        rng = np.random.default_rng(5)
        for m, lam in [(2, 3.0), (3, 10.0), (5, 50.0), (10, 1000.0)]:
            p = rng.dirichlet(np.ones(m), 17)
            taus = rng.dirichlet(np.ones(m), 300)
            np.testing.assert_allclose(_membership_pass(p, taus, lam, False)[0], _membership_reference(p, taus, lam), rtol=1e-12, atol=1e-15)

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        p = rng.dirichlet(np.ones(4), 3)
        taus = rng.dirichlet(np.ones(4), 50)
        _, jac = _membership_pass(p, taus, 5.0, True)
        h = 1e-6
        for a in range(4):
            dp = np.zeros_like(p)
            dp[:, a] = h
            fd = (_membership_reference(p + dp, taus, 5.0) - _membership_reference(p - dp, taus, 5.0)) / (2 * h)
            np.testing.assert_allclose(jac[:, :, a], fd, rtol=1e-6, atol=1e-9)

    def test_huge_steepness_is_finite(self):
        ts = uniform_set(4, 64)
        out = smoothed_memberships(np.random.default_rng(1).dirichlet(np.ones(4), 20), ts, 1e6)
        assert np.all(np.isfinite(out)) and np.all((out >= 0) & (out <= 1))

    @pytest.mark.parametrize("lam", [10, 100, 1000])
    def test_converges_to_hard_indicator(self, lam):
        m = 3
        rng = np.random.default_rng(lam)
        ts = uniform_set(m, 200, seed=lam)
        preds = rng.dirichlet(np.ones(m), 200)
        d = margin_matrix(preds[:, None, :], ts.samples[None])
        off = ~np.eye(m, dtype=bool)
        delta = np.abs(d[..., off]).min(axis=(1, 2))
        bound = m / (1.0 + np.exp(lam * delta))
        err = np.abs(smoothed_memberships(preds, ts, lam) - mc_hard_memberships(preds, ts))
        assert np.all(err <= bound[:, None] + 1e-12)

    def test_rejects_nonpositive_steepness(self):
        with pytest.raises(ValueError):
            smoothed_membership((0.5, 0.5), (0.5, 0.5), 0)


class TestHardMembership:
    def test_vertex(self):
        ts = uniform_set(4, 500)
        assert mc_hard_membership(vertex(0, 4), ts)[0] == 1.0

    def test_barycenter_symmetric(self):
        n = 20_000
        ts = uniform_set(5, n, seed=3)
        np.testing.assert_allclose(mc_hard_membership(barycenter(5), ts), 0.2, atol=3 / math.sqrt(n))

    def test_binary_analytic(self):
        ts = uniform_set(2, 100_000)
        assert abs(mc_hard_membership((0.7, 0.3), ts)[0] - 0.7) < 0.005

    def test_hoeffding_guarantee(self):
        eps, delta = 0.1, 0.1
        n = hoeffding_samples(eps, delta)
        prior = DirichletPrior.symmetric(1, 2)
        misses = sum(
            abs(mc_hard_membership((0.7, 0.3), sample_thresholds(prior, n, seed))[0] - 0.7) >= eps for seed in range(200)
        )
        noise = 3 * math.sqrt(delta * (1 - delta) / 200)
        assert misses / 200 <= delta + noise


class TestSoftConfusions:
    def test_complementary_counts(self):
        rng = np.random.default_rng(2)
        preds = rng.dirichlet(np.ones(4), 30)
        labels = rng.integers(0, 4, 30)
        cms = soft_confusions(preds, labels, uniform_set(4, 128), 10)
        for j, cm in enumerate(cms):
            count = np.sum(labels == j)
            assert math.isclose(cm.tp + cm.fn, count, abs_tol=1e-12)
            assert math.isclose(cm.fp + cm.tn, 30 - count, abs_tol=1e-12)
            assert abs(cm.total - 30) <= 1e-6 * 30
            assert min(cm.tn, cm.fp, cm.fn, cm.tp) >= 0

    def test_one_hot_predictions(self):
        labels = np.array([0, 1, 2, 0, 1, 2, 2])
        preds = np.eye(3)[labels]
        ts = uniform_set(3, 1024)
        # brute-force hard indicators: every vertex sits in its own region
        np.testing.assert_array_equal(mc_hard_memberships(preds, ts), preds)
        for j, cm in enumerate(soft_confusions(preds, labels, ts, 1e4)):
            assert cm.tp >= 0.95 * np.sum(labels == j)

    def test_vanishing_steepness(self):
        labels = np.array([0, 0, 1, 2, 2, 2])
        preds = np.random.default_rng(4).dirichlet(np.ones(3), 6)
        for j, cm in enumerate(soft_confusions(preds, labels, uniform_set(3, 64), 1e-9)):
            assert math.isclose(cm.tp, 0.25 * np.sum(labels == j), rel_tol=1e-6)

    def test_batch_additivity(self):
        rng = np.random.default_rng(8)
        preds = rng.dirichlet(np.ones(3), 40)
        labels = rng.integers(0, 3, 40)
        ts = uniform_set(3, 100)
        whole = soft_confusions(preds, labels, ts, 20)
        a = soft_confusions(preds[:15], labels[:15], ts, 20)
        b = soft_confusions(preds[15:], labels[15:], ts, 20)
        for w, x, y in zip(whole, a, b):
            for f in ("tn", "fp", "fn", "tp"):
                assert math.isclose(getattr(w, f), getattr(x, f) + getattr(y, f), rel_tol=1e-12, abs_tol=1e-12)

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            soft_confusions(np.empty((0, 3)), [], uniform_set(3, 4), 10)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 5),
    st.integers(0, 2**31),
    st.floats(0.0, 0.5),
    st.sampled_from([1.0, 10.0, 100.0]),
)
def test_membership_monotone_in_own_coordinate(m, seed, frac, lam):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(m))
    j, k = rng.choice(m, 2, replace=False)
    moved = p.copy()
    shift = frac * moved[k]
    moved[j] += shift
    moved[k] -= shift
    ts = ThresholdSet(rng.dirichlet(np.ones(m), 32))
    before = smoothed_membership(p, ts, lam)[j]
    after = smoothed_membership(moved, ts, lam)[j]
    assert after >= before - 1e-15
