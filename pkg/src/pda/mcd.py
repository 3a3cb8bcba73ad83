"""Minimum Covariance Determinant location/scatter estimation.

Two modes share one entry point:

* exhaustive -- when the number of h-subsets C(n, h) is small enough,
  every subset is enumerated and the global optimum returned;
* randomized FAST-MCD -- otherwise, C-step iteration is run from several
  random (D+1)-point seeds. Each C-step recomputes Mahalanobis distances
  under the current estimate, keeps the h closest points and refits; the
  subset covariance determinant never increases, so iteration converges.

The returned mean and covariance are exactly the sample mean and sample
covariance (ddof=1) of the selected support subset. Regularization
(lambda*I with lambda = 1e-6 * max(trace/D, 1e-12)) is applied only where
a covariance must be inverted, keeping rank-deficient subsets from ever
crashing the estimator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DataError, PreconditionError, StateError


@dataclass(frozen=True)
class McdConfig:
    """Tuning knobs for the estimator; defaults suit desk-scale data."""

    h_fraction: float = 0.75
    n_starts: int = 10
    c_steps_max: int = 20
    det_rel_tol: float = 1e-9
    seed: int = 0
    exhaustive_threshold: int = 10000

    def validate(self) -> None:
        if not 0.5 < self.h_fraction <= 1.0:
            raise PreconditionError(f"h_fraction must lie in (0.5, 1.0], got {self.h_fraction}")
        if self.n_starts < 1 or self.c_steps_max < 1:
            raise PreconditionError("n_starts and c_steps_max must be positive")
        if self.det_rel_tol < 0:
            raise PreconditionError("det_rel_tol must be nonnegative")
        if self.seed < 0:
            raise PreconditionError("seed must be an unsigned integer")


@dataclass(frozen=True)
class RobustEstimate:
    """Robust location/scatter plus the h-subset it was computed from."""

    mean: np.ndarray
    cov: np.ndarray
    log_det: float
    support: np.ndarray

    @property
    def h(self) -> int:
        return self.support.shape[0]


def resolve_h(n: int, dim: int, h_fraction: float) -> int:
    """Subset size: max(ceil(h_fraction * n), D + 1), guarded against float fuzz."""
    h = max(math.ceil(h_fraction * n - 1e-9), dim + 1)
    if h > n:
        raise PreconditionError(f"subset size h={h} exceeds n={n}")
    return h


def subset_mean_cov(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and sample covariance (ddof=1) of a point set."""
    mean = points.mean(axis=0)
    cov = np.atleast_2d(np.cov(points, rowvar=False, ddof=1))
    return mean, cov


def regularize(cov: np.ndarray) -> np.ndarray:
    """Add lambda*I, lambda = 1e-6 * max(trace/D, 1e-12); keeps solves rank-safe."""
    dim = cov.shape[0]
    lam = 1e-6 * max(np.trace(cov) / dim, 1e-12)
    return cov + lam * np.eye(dim)


def regularized_cholesky(cov: np.ndarray):
    """Cholesky factor of the regularized covariance, escalating lambda on failure."""
    dim = cov.shape[0]
    lam = 1e-6 * max(np.trace(cov) / dim, 1e-12)
    for _ in range(8):
        try:
            return cho_factor(cov + lam * np.eye(dim), lower=True)
        except LinAlgError:
            lam *= 1e3
    raise StateError("covariance cannot be factorized even after regularization")


def mahalanobis_sq(points: np.ndarray, mean: np.ndarray, factor) -> np.ndarray:
    """Squared Mahalanobis distances given a Cholesky factor of the scatter."""
    centered = points - mean
    solved = cho_solve(factor, centered.T)
    return np.einsum("ij,ji->i", centered, solved)


def _log_det(cov: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(cov)
    return float(value) if sign > 0 else -math.inf


def _c_steps(points: np.ndarray, h: int, init: np.ndarray,
             cfg: McdConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, list[float]]:
    """Iterate C-steps from an initial subset until the determinant settles.

    Returns (support, mean, cov, log_det, per-step log-det trace). The trace
    records only full h-subsets, where the non-increasing guarantee applies.
    """
    subset = init
    mean, cov = subset_mean_cov(points[subset])
    log_det = _log_det(cov)
    dets: list[float] = []
    for _ in range(cfg.c_steps_max):
        factor = regularized_cholesky(cov)
        d2 = mahalanobis_sq(points, mean, factor)
        new_subset = np.sort(np.argsort(d2, kind="stable")[:h])
        if subset.shape[0] == h and np.array_equal(new_subset, subset):
            break
        subset = new_subset
        mean, cov = subset_mean_cov(points[subset])
        log_det = _log_det(cov)
        dets.append(log_det)
        if log_det == -math.inf:
            break
        if len(dets) >= 2 and dets[-2] - dets[-1] <= cfg.det_rel_tol:
            break
    return subset, mean, cov, log_det, dets


def fast_mcd(points: np.ndarray, cfg: McdConfig = McdConfig(),
             return_traces: bool = False):
    """Robust location/scatter via MCD.

    Uses exact subset enumeration when C(n, h) <= cfg.exhaustive_threshold
    (the result is then the global MCD optimum), randomized FAST-MCD
    otherwise. Identical seed and config give a bit-identical support set;
    across starts, ties in the determinant break toward the lowest start
    index.

    With return_traces=True also returns the list of per-start C-step
    log-determinant traces (empty in exhaustive mode).
    """
    cfg.validate()
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise PreconditionError("points must be a 2-d array")
    if not np.isfinite(points).all():
        raise DataError("points contain NaN or Inf")
    n, dim = points.shape
    if n < dim + 2:
        raise PreconditionError(f"need at least D+2={dim + 2} points, got {n}")
    h = resolve_h(n, dim, cfg.h_fraction)

    traces: list[list[float]] = []
    if h == n:
        support = np.arange(n, dtype=np.int64)
        mean, cov = subset_mean_cov(points)
        best = (support, mean, cov, _log_det(cov))
    elif math.comb(n, h) <= cfg.exhaustive_threshold:
        best = None
        for combo in itertools.combinations(range(n), h):
            subset = np.asarray(combo, dtype=np.int64)
            mean, cov = subset_mean_cov(points[subset])
            log_det = _log_det(cov)
            if best is None or log_det < best[3]:
                best = (subset, mean, cov, log_det)
    else:
        best = None
        init_size = min(dim + 1, n - 1)
        for start in range(cfg.n_starts):
            rng = np.random.default_rng(cfg.seed ^ start)
            init = np.sort(rng.choice(n, size=init_size, replace=False))
            subset, mean, cov, log_det, dets = _c_steps(points, h, init, cfg)
            traces.append(dets)
            if best is None or log_det < best[3]:
                best = (subset, mean, cov, log_det)

    support, mean, cov, log_det = best
    estimate = RobustEstimate(
        mean=mean,
        cov=cov,
        log_det=log_det,
        support=np.asarray(support, dtype=np.int64),
    )
    if return_traces:
        return estimate, traces
    return estimate
