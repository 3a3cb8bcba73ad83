"""Synthetic domain-shift benchmark generator.

Produces labeled feature bundles with a controllable gap between the
distribution a frozen "source classifier" was fit on and the distribution
the features are actually drawn from. Source class means sit on a scaled
coordinate simplex with unit covariance; target features are Gaussian
around per-class shifted means with scaled covariance. The bundle's logits
come from closed-form linear-discriminant scoring against the *source*
parameters, so they degrade genuinely as the shift grows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle_io import BundleMeta, FeatureBundle, validate_bundle
from .errors import PreconditionError

# Distance of each source class mean from the origin; pairwise class
# separation is SEPARATION * sqrt(2) against unit source covariance.
SEPARATION = 4.0


@dataclass(frozen=True)
class ShiftSpec:
    """Parameters of one synthetic shifted-domain dataset."""

    classes: int
    dims: int
    per_class: int
    mean_shift: float = 0.0
    cov_scale: float = 1.0
    label_skew: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.classes < 2:
            raise PreconditionError("need at least two classes")
        if self.dims < self.classes:
            raise PreconditionError("dims must be >= classes to place the mean simplex")
        if self.per_class < 1:
            raise PreconditionError("per_class must be positive")
        if self.mean_shift < 0:
            raise PreconditionError("mean_shift must be nonnegative")
        if self.cov_scale <= 0:
            raise PreconditionError("cov_scale must be positive")
        if not 0.0 <= self.label_skew < 1.0:
            raise PreconditionError("label_skew must lie in [0, 1)")
        if self.seed < 0:
            raise PreconditionError("seed must be an unsigned integer")

    @classmethod
    def from_dict(cls, record: dict) -> "ShiftSpec":
        try:
            spec = cls(**record)
        except TypeError as exc:
            raise PreconditionError(f"invalid shift spec: {exc}") from exc
        spec.validate()
        return spec


def source_means(spec: ShiftSpec) -> np.ndarray:
    """Class means of the source distribution: scaled simplex vertices."""
    means = np.zeros((spec.classes, spec.dims))
    means[np.arange(spec.classes), np.arange(spec.classes)] = SEPARATION
    return means


def target_means(spec: ShiftSpec) -> np.ndarray:
    """Shifted class means actually used by generate (same seeded draw)."""
    rng = np.random.default_rng(spec.seed)
    directions = rng.standard_normal((spec.classes, spec.dims))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return source_means(spec) + spec.mean_shift * directions


def class_counts(spec: ShiftSpec) -> np.ndarray:
    """Deterministic class sizes matching the skewed label marginal.

    Proportions follow (1 - label_skew)^l, apportioned to the total by
    largest remainder so the counts sum exactly to classes * per_class.
    """
    total = spec.classes * spec.per_class
    raw = (1.0 - spec.label_skew) ** np.arange(spec.classes)
    quota = raw / raw.sum() * total
    counts = np.floor(quota).astype(np.int64)
    remainder = quota - counts
    short = total - counts.sum()
    for label in np.argsort(-remainder, kind="stable")[:short]:
        counts[label] += 1
    return counts


def generate(spec: ShiftSpec) -> FeatureBundle:
    """Draw one labeled bundle; identical spec (incl. seed) -> identical bundle."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    mu_src = source_means(spec)
    # Per-class random unit shift directions; must stay the first draw so
    # target_means reproduces them.
    directions = rng.standard_normal((spec.classes, spec.dims))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    mu_tgt = mu_src + spec.mean_shift * directions

    counts = class_counts(spec)
    labels = np.repeat(np.arange(spec.classes, dtype=np.int64), counts)
    noise = rng.standard_normal((labels.shape[0], spec.dims))
    features = mu_tgt[labels] + np.sqrt(spec.cov_scale) * noise

    logits = source_logits(features, mu_src)
    meta = BundleMeta(
        num_classes=spec.classes,
        feature_dim=spec.dims,
        domain=f"synthetic(shift={spec.mean_shift:g},cov={spec.cov_scale:g})",
        backbone="analytic-lda",
        class_names=[f"class{i}" for i in range(spec.classes)],
    )
    bundle = FeatureBundle(features=features, logits=logits, labels=labels, meta=meta)
    validate_bundle(bundle)
    return bundle


def source_logits(features: np.ndarray, mu_src: np.ndarray) -> np.ndarray:
    """Frozen source classifier: LDA on the true source parameters.

    Unit source covariance and uniform priors give the linear score
    x . mu_l - ||mu_l||^2 / 2 + log(1/C); its softmax is the exact source
    posterior, so bundle weights are genuine source-model confidences.
    """
    num_classes = mu_src.shape[0]
    return (
        features @ mu_src.T
        - 0.5 * np.square(mu_src).sum(axis=1)[None, :]
        + np.log(1.0 / num_classes)
    )


def load_shift_spec(path: str | Path) -> ShiftSpec:
    """Read a ShiftSpec from a JSON file."""
    from .errors import FormatError, NotFoundError

    p = Path(path)
    if not p.is_file():
        raise NotFoundError(f"shift spec file does not exist: {p}")
    try:
        record = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(record, dict):
        raise FormatError(f"{p}: shift spec must be a JSON object")
    return ShiftSpec.from_dict(record)
