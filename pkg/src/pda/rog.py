"""Robust Gaussian generative classifier on per-class MCD estimates.

Per-class robust means come from the MCD estimator; a single tied scatter
matrix (support-count-weighted average of the per-class robust covariances)
is shared by all classes, which keeps the fit tractable when the feature
dimension is large relative to per-class counts. Posteriors are softmaxed
Mahalanobis scores plus log priors.

Classes too small for MCD (< D+2 members by default, configurable) fall
back to their plain pseudo-label mean and contribute no scatter term. When
no class is large enough for MCD at all, every class with at least two
members contributes its regularized sample covariance instead, so the tied
scatter is always estimated from the data actually available.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .bundle_io import FeatureBundle
from .errors import SchemaError, StateError
from .mcd import McdConfig, fast_mcd, regularize, regularized_cholesky, subset_mean_cov
from .pseudo_label import PseudoLabeling

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoGModel:
    """Per-class robust means, tied covariance and log class priors.

    tied_cov is the raw pooled estimate; precision_factor holds the
    Cholesky factorization of its regularized form, which is what every
    Mahalanobis evaluation goes through. Rows of `means` for absent
    classes are NaN with log_priors -inf.
    """

    means: np.ndarray
    tied_cov: np.ndarray
    precision_factor: tuple
    log_priors: np.ndarray
    present: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.means.shape[1]


def fit_rog(bundle: FeatureBundle, labeling: PseudoLabeling,
            cfg: McdConfig = McdConfig(), *, uniform_priors: bool = False,
            mcd_min_members: int | None = None) -> RoGModel:
    """Estimate the classifier from features and pseudo-labels.

    Each class large enough gets an MCD fit with its own deterministic
    seed (global seed XOR class index), so per-class fits can run in any
    order or in parallel without changing results.
    """
    if labeling.num_examples != bundle.num_examples:
        raise SchemaError("labeling and bundle disagree on the number of examples")
    if labeling.num_classes != bundle.num_classes:
        raise SchemaError("labeling and bundle disagree on the number of classes")
    features = bundle.features.astype(np.float64, copy=False)
    n, dim = features.shape
    num_classes = bundle.num_classes
    mcd_min = dim + 2 if mcd_min_members is None else mcd_min_members

    class_indices = [np.flatnonzero(labeling.pseudo == label) for label in range(num_classes)]
    counts = np.array([idx.size for idx in class_indices], dtype=np.int64)
    present = counts > 0
    feasible = counts >= mcd_min
    mcd_anywhere = bool(feasible.any())
    if not mcd_anywhere:
        logger.warning("no class has %d members; tied scatter falls back to "
                       "pooled sample covariances", mcd_min)

    means = np.full((num_classes, dim), np.nan, dtype=np.float64)
    scatter_sum = np.zeros((dim, dim), dtype=np.float64)
    scatter_weight = 0.0
    for label in range(num_classes):
        idx = class_indices[label]
        if idx.size == 0:
            continue
        class_feats = features[idx]
        if feasible[label]:
            est = fast_mcd(class_feats, dataclasses.replace(cfg, seed=cfg.seed ^ label))
            means[label] = est.mean
            scatter_sum += counts[label] * est.cov
            scatter_weight += counts[label]
        else:
            means[label] = class_feats.mean(axis=0)
            if not mcd_anywhere and idx.size >= 2:
                _, cov = subset_mean_cov(class_feats)
                scatter_sum += counts[label] * regularize(cov)
                scatter_weight += counts[label]
    if scatter_weight == 0.0:
        raise StateError("no class is large enough to estimate any scatter; "
                         "cannot fit the generative classifier")
    tied_cov = scatter_sum / scatter_weight
    precision_factor = regularized_cholesky(tied_cov)

    log_priors = np.full(num_classes, -np.inf, dtype=np.float64)
    if uniform_priors:
        log_priors[present] = -np.log(present.sum())
    else:
        log_priors[present] = np.log(counts[present] / n)
    return RoGModel(means=means, tied_cov=tied_cov, precision_factor=precision_factor,
                    log_priors=log_priors, present=present)


def rog_posterior(model: RoGModel, features: np.ndarray) -> np.ndarray:
    """Class posteriors under the tied-covariance Gaussian model.

    Row i, class l: softmax_l of log_prior_l - (x_i - mu_l)' S^-1 (x_i - mu_l)/2.
    Absent classes get probability exactly 0.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.feature_dim:
        raise SchemaError(
            f"dimension mismatch: features are {features.shape}, "
            f"model expects N x {model.feature_dim}"
        )
    present_idx = np.flatnonzero(model.present)
    mu = model.means[present_idx]
    # Shared centering keeps the expanded quadratic form well-conditioned
    # under large common offsets.
    ref = mu.mean(axis=0)
    x = features - ref
    m = mu - ref
    solved_x = cho_solve(model.precision_factor, x.T)          # D x N
    solved_m = cho_solve(model.precision_factor, m.T)          # D x P
    x_quad = np.einsum("ij,ji->i", x, solved_x)                # N
    cross = x @ solved_m                                       # N x P
    m_quad = np.einsum("ij,ji->i", m, solved_m)                # P
    quad = x_quad[:, None] - 2.0 * cross + m_quad[None, :]
    scores = model.log_priors[present_idx][None, :] - 0.5 * quad
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    e /= e.sum(axis=1, keepdims=True)
    probs = np.zeros((features.shape[0], model.num_classes), dtype=np.float64)
    probs[:, present_idx] = e
    return probs
