"""End-to-end adaptation methods over a feature bundle.

Six methods share one entry point:

    source        argmax of the stored classifier logits (no adaptation)
    pda           confidence-weighted prototypes from model pseudo-labels
    pda-mcd       robust-classifier pseudo-labels, then weighted prototypes
    mcd-direct    the robust generative classifier used directly
    upper         prototypes from ground-truth labels (quality ceiling)
    onehot-proto  unweighted prototypes, the one-hot ablation

Adaptation (prototype/classifier construction) and inference are timed
separately with a monotonic clock; bundle loading is never included.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .bundle_io import FeatureBundle
from .classify import nearest_prototype
from .errors import PreconditionError, SchemaError
from .mcd import McdConfig
from .prototypes import (
    PrototypeSet,
    build_prototypes,
    build_prototypes_onehot,
    build_prototypes_true,
)
from .pseudo_label import PseudoLabeling, labeling_from_logits, pseudo_labels
from .rog import fit_rog, rog_posterior

METHODS = ("source", "pda", "pda-mcd", "mcd-direct", "upper", "onehot-proto")


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved run configuration; echoed into every report."""

    metric: str = "cosine"
    h_fraction: float = 0.75
    n_starts: int = 10
    c_steps_max: int = 20
    det_rel_tol: float = 1e-9
    exhaustive_threshold: int = 10000
    seed: int = 0
    threads: int = 0  # 0 = hardware concurrency; informational for BLAS pools
    uniform_priors: bool = False
    onehot: bool = False
    weighted_true: bool = False

    def mcd_config(self) -> McdConfig:
        return McdConfig(
            h_fraction=self.h_fraction,
            n_starts=self.n_starts,
            c_steps_max=self.c_steps_max,
            det_rel_tol=self.det_rel_tol,
            seed=self.seed,
            exhaustive_threshold=self.exhaustive_threshold,
        )


@dataclass(frozen=True)
class RunReport:
    """Outcome of one method run on one bundle."""

    method: str
    predictions: np.ndarray
    adapt_time_s: float
    infer_time_s: float
    config_echo: dict
    accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "accuracy": self.accuracy,
            "predictions": self.predictions.tolist(),
            "adapt_time_s": self.adapt_time_s,
            "infer_time_s": self.infer_time_s,
            "config_echo": self.config_echo,
        }


def _rog_labeling(bundle: FeatureBundle, base: PseudoLabeling,
                  cfg: PipelineConfig) -> PseudoLabeling:
    """Replace the pre-trained classifier's labeling by the robust one."""
    model = fit_rog(bundle, base, cfg.mcd_config(), uniform_priors=cfg.uniform_priors)
    posterior = rog_posterior(model, bundle.features)
    return pseudo_labels(posterior)


def _adapt(bundle: FeatureBundle, method: str, cfg: PipelineConfig) -> PrototypeSet:
    """Build the prototype set for the prototype-based methods."""
    if method == "pda":
        return build_prototypes(bundle, labeling_from_logits(bundle.logits))
    if method == "onehot-proto":
        return build_prototypes_onehot(bundle, labeling_from_logits(bundle.logits))
    if method == "pda-mcd":
        labeling = _rog_labeling(bundle, labeling_from_logits(bundle.logits), cfg)
        if cfg.onehot:
            return build_prototypes_onehot(bundle, labeling)
        return build_prototypes(bundle, labeling)
    if method == "upper":
        if bundle.labels is None:
            raise PreconditionError("method 'upper' requires ground-truth labels")
        weights = None
        if cfg.weighted_true:
            labeling = labeling_from_logits(bundle.logits)
            weights = labeling.probs[np.arange(bundle.num_examples), bundle.labels]
        return build_prototypes_true(bundle, weights=weights)
    raise SchemaError(f"unknown prototype method {method!r}")


def run_method(bundle: FeatureBundle, method: str,
               cfg: PipelineConfig = PipelineConfig()) -> RunReport:
    """Run one adaptation method on a bundle and report predictions/timings."""
    if method not in METHODS:
        raise SchemaError(f"unknown method {method!r}, expected one of {METHODS}")

    if method == "source":
        adapt_time = 0.0
        t0 = time.perf_counter()
        predictions = np.argmax(bundle.logits, axis=1).astype(np.int64)
        infer_time = time.perf_counter() - t0
    elif method == "mcd-direct":
        t0 = time.perf_counter()
        model = fit_rog(bundle, labeling_from_logits(bundle.logits), cfg.mcd_config(),
                        uniform_priors=cfg.uniform_priors)
        adapt_time = time.perf_counter() - t0
        t0 = time.perf_counter()
        posterior = rog_posterior(model, bundle.features)
        predictions = np.argmax(posterior, axis=1).astype(np.int64)
        infer_time = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        protos = _adapt(bundle, method, cfg)
        adapt_time = time.perf_counter() - t0
        t0 = time.perf_counter()
        predictions = nearest_prototype(bundle.features, protos, cfg.metric).labels
        infer_time = time.perf_counter() - t0

    acc = None
    if bundle.labels is not None:
        acc = float(np.mean(predictions == bundle.labels))
    echo = dataclasses.asdict(cfg)
    echo["method"] = method
    return RunReport(method=method, predictions=predictions, adapt_time_s=adapt_time,
                     infer_time_s=infer_time, config_echo=echo, accuracy=acc)


def run_all_methods(bundle: FeatureBundle,
                    cfg: PipelineConfig = PipelineConfig()) -> list[RunReport]:
    """Run every method applicable to the bundle, in the canonical order."""
    reports = []
    for method in METHODS:
        if method == "upper" and bundle.labels is None:
            continue
        reports.append(run_method(bundle, method, cfg))
    return reports
