"""Nearest-prototype inference and accuracy evaluation.

Cosine distance (the default) is 1 - <x,c>/(||x|| ||c||) with norms floored
at 1e-12, so a zero vector sits at distance 1 from every nonzero prototype
instead of producing NaN. Euclidean distance is the plain L2 norm. Absent
prototypes are excluded: their score column is -inf and they can never be
predicted. Distance ties break toward the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, StateError
from .prototypes import PrototypeSet

NORM_FLOOR = 1e-12

METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class Prediction:
    """Predicted class per example plus negated distances to each prototype."""

    labels: np.ndarray
    scores: np.ndarray

    @property
    def num_examples(self) -> int:
        return self.labels.shape[0]


def _cosine_distances(x: np.ndarray, protos: np.ndarray) -> np.ndarray:
    x_norm = np.maximum(np.linalg.norm(x, axis=1, keepdims=True), NORM_FLOOR)
    p_norm = np.maximum(np.linalg.norm(protos, axis=1, keepdims=True), NORM_FLOOR)
    return 1.0 - (x / x_norm) @ (protos / p_norm).T


def _euclidean_distances(x: np.ndarray, protos: np.ndarray) -> np.ndarray:
    sq = (
        np.square(x).sum(axis=1)[:, None]
        - 2.0 * x @ protos.T
        + np.square(protos).sum(axis=1)[None, :]
    )
    return np.sqrt(np.maximum(sq, 0.0))


def nearest_prototype(features: np.ndarray, protos: PrototypeSet,
                      metric: str = "cosine") -> Prediction:
    """Assign each feature vector to the class of its closest present prototype."""
    if metric not in METRICS:
        raise SchemaError(f"unknown metric {metric!r}, expected one of {METRICS}")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise SchemaError("features must be a 2-d array")
    if features.shape[1] != protos.feature_dim:
        raise SchemaError(
            f"dimension mismatch: features have {features.shape[1]} columns, "
            f"prototypes have {protos.feature_dim}"
        )
    present_idx = np.flatnonzero(protos.present)
    if present_idx.size == 0:
        raise StateError("no present prototypes to classify against")
    vectors = protos.vectors[present_idx]
    if metric == "cosine":
        dist = _cosine_distances(features, vectors)
    else:
        dist = _euclidean_distances(features, vectors)
    scores = np.full((features.shape[0], protos.num_classes), -np.inf, dtype=np.float64)
    scores[:, present_idx] = -dist
    labels = np.argmax(scores, axis=1).astype(np.int64)
    return Prediction(labels=labels, scores=scores)


def accuracy(pred: Prediction | np.ndarray, labels: np.ndarray) -> float:
    """Fraction of exact matches between predictions and ground truth."""
    predicted = pred.labels if isinstance(pred, Prediction) else np.asarray(pred)
    labels = np.asarray(labels)
    if predicted.shape != labels.shape:
        raise SchemaError(
            f"length mismatch: {predicted.shape[0]} predictions vs {labels.shape[0]} labels"
        )
    return float(np.mean(predicted == labels))


def per_class_accuracy(predicted: np.ndarray, labels: np.ndarray,
                       num_classes: int) -> dict[int, float]:
    """Accuracy restricted to each true class; classes with no examples omitted."""
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    if predicted.shape != labels.shape:
        raise SchemaError("length mismatch between predictions and labels")
    out: dict[int, float] = {}
    for label in range(num_classes):
        mask = labels == label
        if mask.any():
            out[label] = float(np.mean(predicted[mask] == label))
    return out


def accuracy_report(predicted: np.ndarray, labels: np.ndarray, num_classes: int,
                    num_absent_classes: int | None = None) -> dict:
    """JSON-ready evaluation record for stored or fresh predictions."""
    return {
        "accuracy": accuracy(predicted, labels),
        "per_class_accuracy": {
            str(k): v for k, v in per_class_accuracy(predicted, labels, num_classes).items()
        },
        "num_absent_classes": num_absent_classes,
    }
