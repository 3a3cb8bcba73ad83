import itertools
import math

import numpy as np
import pytest

from pda.errors import DataError, PreconditionError
from pda.mcd import McdConfig, fast_mcd, resolve_h


def brute_force_mcd(points, h):
    """Independent oracle: enumerate every h-subset, pick minimal det(cov)."""
    n = points.shape[0]
    best_subset, best_det = None, None
    for combo in itertools.combinations(range(n), h):
        sub = points[list(combo)]
        det = np.linalg.det(np.atleast_2d(np.cov(sub, rowvar=False, ddof=1)))
        if best_det is None or det < best_det:
            best_subset, best_det = combo, det
    return np.array(best_subset), best_det


def gaussian_with_outliers(n_in, n_out, dim, seed, outlier_scale=100.0):
    rng = np.random.default_rng(seed)
    inliers = rng.standard_normal((n_in, dim))
    outliers = outlier_scale + rng.standard_normal((n_out, dim))
    return np.vstack([inliers, outliers])


def test_h_equals_n_gives_classical_estimates():
    rng = np.random.default_rng(40)
    pts = rng.standard_normal((25, 3))
    est = fast_mcd(pts, McdConfig(h_fraction=1.0))
    np.testing.assert_array_equal(est.support, np.arange(25))
    np.testing.assert_array_equal(est.mean, pts.mean(axis=0))
    np.testing.assert_array_equal(est.cov, np.cov(pts, rowvar=False, ddof=1))


def test_exhaustive_matches_brute_force_oracle():
    for seed in range(8):
        pts = gaussian_with_outliers(9, 3, 2, seed=seed, outlier_scale=8.0)
        cfg = McdConfig(h_fraction=7 / 12)  # n=12 -> h=7, C(12,7)=792
        est = fast_mcd(pts, cfg)
        assert est.h == 7
        oracle_support, oracle_det = brute_force_mcd(pts, 7)
        np.testing.assert_array_equal(est.support, oracle_support)
        np.testing.assert_allclose(math.exp(est.log_det), oracle_det, rtol=1e-8)


def test_gross_outlier_excluded_from_support():
    rng = np.random.default_rng(41)
    pts = np.vstack([rng.standard_normal((9, 2)), [[100.0, 100.0]]])
    est = fast_mcd(pts, McdConfig(h_fraction=0.7))  # h = 7
    assert 9 not in est.support
    support_mean = pts[est.support].mean(axis=0)
    np.testing.assert_allclose(est.mean, support_mean, rtol=0, atol=1e-9)
    oracle_support, _ = brute_force_mcd(pts, 7)
    np.testing.assert_array_equal(est.support, oracle_support)


def test_estimate_rederivable_from_support():
    pts = gaussian_with_outliers(12, 3, 2, seed=42)
    est = fast_mcd(pts, McdConfig(h_fraction=0.75))
    sub = pts[est.support]
    np.testing.assert_array_equal(est.mean, sub.mean(axis=0))
    np.testing.assert_array_equal(est.cov, np.cov(sub, rowvar=False, ddof=1))
    assert est.cov.shape == (2, 2)
    np.testing.assert_allclose(est.cov, est.cov.T, rtol=0, atol=1e-12)
    assert len(set(est.support.tolist())) == est.h
    assert (np.diff(est.support) > 0).all()


def test_c_step_determinant_monotonicity():
    randomized = McdConfig(h_fraction=0.75, exhaustive_threshold=0, n_starts=10)
    for seed in range(10):
        pts = gaussian_with_outliers(16, 4, 2, seed=seed, outlier_scale=10.0)
        _, traces = fast_mcd(pts, randomized, return_traces=True)
        assert traces, "randomized mode must record traces"
        for dets in traces:
            for prev, cur in zip(dets, dets[1:]):
                assert cur <= prev + 1e-9 * max(1.0, abs(prev))


def test_affine_equivariance_exhaustive():
    rng = np.random.default_rng(43)
    pts = gaussian_with_outliers(10, 2, 2, seed=43, outlier_scale=12.0)
    amat = np.array([[2.0, 0.7], [-0.4, 1.5]])
    b = np.array([3.0, -1.0])
    cfg = McdConfig(h_fraction=0.75)
    est = fast_mcd(pts, cfg)
    est_t = fast_mcd(pts @ amat.T + b, cfg)
    np.testing.assert_array_equal(est.support, est_t.support)
    np.testing.assert_allclose(est_t.mean, amat @ est.mean + b, rtol=1e-8)
    np.testing.assert_allclose(est_t.cov, amat @ est.cov @ amat.T, rtol=1e-8)


def test_randomized_determinism_and_seed_sensitivity():
    pts = gaussian_with_outliers(40, 10, 3, seed=44)
    cfg = McdConfig(h_fraction=0.75, exhaustive_threshold=0, seed=123)
    est1 = fast_mcd(pts, cfg)
    est2 = fast_mcd(pts, cfg)
    np.testing.assert_array_equal(est1.support, est2.support)
    assert est1.mean.tobytes() == est2.mean.tobytes()
    assert est1.cov.tobytes() == est2.cov.tobytes()


def test_randomized_attains_exhaustive_optimum_mostly():
    hits, total = 0, 20
    for seed in range(total):
        pts = gaussian_with_outliers(11, 4, 2, seed=100 + seed, outlier_scale=9.0)
        exhaustive = fast_mcd(pts, McdConfig(h_fraction=0.75))
        randomized = fast_mcd(
            pts, McdConfig(h_fraction=0.75, exhaustive_threshold=0, seed=seed)
        )
        if np.array_equal(randomized.support, exhaustive.support):
            hits += 1
        # determinant never more than 5% above the optimum
        assert randomized.log_det <= exhaustive.log_det + math.log(1.05)
    assert hits >= int(0.9 * total)


def test_identical_points_do_not_crash():
    pts = np.ones((10, 2))
    est = fast_mcd(pts, McdConfig(h_fraction=0.75, exhaustive_threshold=0))
    assert est.log_det == -math.inf
    np.testing.assert_array_equal(est.mean, [1.0, 1.0])


def test_collinear_points_do_not_crash():
    rng = np.random.default_rng(45)
    t = rng.standard_normal(12)
    pts = np.column_stack([t, 2 * t])  # rank 1
    est = fast_mcd(pts, McdConfig(h_fraction=0.75, exhaustive_threshold=0))
    assert est.log_det == -math.inf


def test_too_few_points_rejected():
    with pytest.raises(PreconditionError):
        fast_mcd(np.zeros((3, 2)), McdConfig())


def test_nan_points_rejected():
    pts = np.zeros((10, 2))
    pts[0, 0] = np.nan
    with pytest.raises(DataError):
        fast_mcd(pts, McdConfig())


def test_invalid_h_fraction_rejected():
    with pytest.raises(PreconditionError):
        fast_mcd(np.zeros((10, 2)), McdConfig(h_fraction=0.5))
    with pytest.raises(PreconditionError):
        fast_mcd(np.zeros((10, 2)), McdConfig(h_fraction=1.1))


def test_resolve_h():
    assert resolve_h(12, 2, 7 / 12) == 7
    assert resolve_h(12, 2, 0.75) == 9
    assert resolve_h(100, 2, 1.0) == 100
    assert resolve_h(10, 8, 0.51) == 9  # D+1 floor dominates


def test_h_floor_is_dimension_plus_one():
    rng = np.random.default_rng(46)
    pts = rng.standard_normal((8, 5))
    est = fast_mcd(pts, McdConfig(h_fraction=0.51, exhaustive_threshold=10**6))
    assert est.h == 6
