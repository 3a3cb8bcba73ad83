"""Pseudo-labels and confidence weights from classifier logits.

The pre-trained classifier supplies per-class probabilities; the argmax
class becomes the pseudo-label and its probability becomes the example's
confidence weight. Exact probability ties break toward the lowest class
index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class PseudoLabeling:
    """Per-example class probabilities, argmax pseudo-labels and weights.

    weights[i] is the probability of the pseudo-label class, i.e. the row
    maximum of probs; it is always >= 1/C for simplex rows.
    """

    probs: np.ndarray
    pseudo: np.ndarray
    weights: np.ndarray

    @property
    def num_examples(self) -> int:
        return self.pseudo.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by per-row max subtraction.

    Always computed in float64 regardless of input precision.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise DataError("softmax_rows: empty input")
    if not np.isfinite(logits).all():
        raise DataError("softmax_rows: logits contain NaN or Inf")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def pseudo_labels(probs: np.ndarray) -> PseudoLabeling:
    """Derive pseudo-labels and confidence weights from probability rows."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 0 or probs.ndim != 2:
        raise DataError("pseudo_labels: need a non-empty N x C probability matrix")
    if not np.isfinite(probs).all():
        raise DataError("pseudo_labels: probabilities contain NaN or Inf")
    pseudo = np.argmax(probs, axis=1).astype(np.int64)
    weights = probs[np.arange(probs.shape[0]), pseudo]
    return PseudoLabeling(probs=probs, pseudo=pseudo, weights=weights)


def labeling_from_logits(logits: np.ndarray) -> PseudoLabeling:
    """Convenience composition: softmax then pseudo-label extraction."""
    return pseudo_labels(softmax_rows(logits))
