"""Confidence-weighted class prototypes.

Each class prototype is the weighted mean of the feature vectors
pseudo-labeled with that class, the weight being the predicted probability
of the pseudo-label class:

    c_l = sum_{i: pseudo_i = l} w_i * x_i  /  sum_{i: pseudo_i = l} w_i

Accumulation runs in 64-bit over ascending example indices so results are
reproducible and permutation-invariant to tight tolerance. Classes that
receive no pseudo-labeled example are flagged absent (NaN rows), never
zero-filled, and are excluded from nearest-prototype search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .bundle_io import FeatureBundle
from .errors import DataError, PreconditionError, SchemaError
from .pseudo_label import PseudoLabeling

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrototypeSet:
    """One prototype per class with its weight mass and support count.

    vectors rows for absent classes are NaN; `present` marks usable rows.
    """

    vectors: np.ndarray
    mass: np.ndarray
    support: np.ndarray
    present: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.vectors.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.vectors.shape[1]


def _accumulate(features: np.ndarray, assignment: np.ndarray, weights: np.ndarray,
                num_classes: int) -> PrototypeSet:
    n, d = features.shape
    vectors = np.full((num_classes, d), np.nan, dtype=np.float64)
    mass = np.zeros(num_classes, dtype=np.float64)
    support = np.zeros(num_classes, dtype=np.int64)
    feats64 = features.astype(np.float64, copy=False)
    w64 = weights.astype(np.float64, copy=False)
    for label in range(num_classes):
        idx = np.flatnonzero(assignment == label)  # ascending index order
        support[label] = idx.size
        if idx.size == 0:
            continue
        w = w64[idx]
        mass[label] = np.add.reduce(w)
        # Normalizing before accumulation makes the weights cancel exactly
        # for singleton classes and keeps the coefficients a distribution.
        vectors[label] = np.add.reduce(feats64[idx] * (w / mass[label])[:, None], axis=0)
    present = support > 0
    absent = int(num_classes - present.sum())
    if absent:
        logger.warning("%d of %d classes have no pseudo-labeled example; "
                       "their prototypes are flagged absent", absent, num_classes)
    return PrototypeSet(vectors=vectors, mass=mass, support=support, present=present)


def _check_pair(bundle: FeatureBundle, labeling: PseudoLabeling) -> None:
    if bundle.num_examples == 0:
        raise DataError("cannot build prototypes from an empty bundle")
    if labeling.num_examples != bundle.num_examples:
        raise SchemaError("labeling and bundle disagree on the number of examples")
    if labeling.num_classes != bundle.num_classes:
        raise SchemaError("labeling and bundle disagree on the number of classes")


def build_prototypes(bundle: FeatureBundle, labeling: PseudoLabeling) -> PrototypeSet:
    """Confidence-weighted prototypes: higher-confidence examples contribute more."""
    _check_pair(bundle, labeling)
    return _accumulate(bundle.features, labeling.pseudo, labeling.weights,
                       bundle.num_classes)


def build_prototypes_onehot(bundle: FeatureBundle, labeling: PseudoLabeling) -> PrototypeSet:
    """Unweighted per-pseudo-label means, the one-hot ablation baseline."""
    _check_pair(bundle, labeling)
    ones = np.ones(bundle.num_examples, dtype=np.float64)
    return _accumulate(bundle.features, labeling.pseudo, ones, bundle.num_classes)


def build_prototypes_true(bundle: FeatureBundle,
                          weights: np.ndarray | None = None) -> PrototypeSet:
    """Prototype-quality ceiling: group by ground-truth labels.

    True labels carry full confidence (w_i = 1) by default; pass `weights`
    to keep model-confidence weighting on top of true-label grouping.
    """
    if bundle.labels is None:
        raise PreconditionError("true-label prototypes require a labeled bundle")
    if bundle.num_examples == 0:
        raise DataError("cannot build prototypes from an empty bundle")
    if weights is None:
        weights = np.ones(bundle.num_examples, dtype=np.float64)
    elif weights.shape != (bundle.num_examples,):
        raise SchemaError("weights must be a length-N vector")
    return _accumulate(bundle.features, bundle.labels, weights, bundle.num_classes)


def save_prototypes(protos: PrototypeSet, path) -> None:
    """Dump a prototype set to a bundle-style directory for inspection."""
    from pathlib import Path

    from .bundle_io import write_array

    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    write_array(root / "prototypes.npy", protos.vectors)
    write_array(root / "mass.npy", protos.mass)
    write_array(root / "support.npy", protos.support)
