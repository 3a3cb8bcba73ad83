"""Feed-forward source-free domain adaptation via class prototypes.

Adapt a pre-trained classifier to a target domain without source data and
without back-propagation: pseudo-label the target set with the frozen
model, build confidence-weighted class prototypes in feature space, and
classify by nearest prototype. A robust Gaussian classifier fitted on MCD
estimates can optionally refine the pseudo-labels first.
"""

from .bundle_io import BundleMeta, FeatureBundle, load_bundle, save_bundle
from .classify import Prediction, accuracy, nearest_prototype
from .errors import (
    DataError,
    FormatError,
    IoError,
    NotFoundError,
    PdaError,
    PreconditionError,
    SchemaError,
    StateError,
)
from .mcd import McdConfig, RobustEstimate, fast_mcd
from .pipeline import METHODS, PipelineConfig, RunReport, run_all_methods, run_method
from .prototypes import (
    PrototypeSet,
    build_prototypes,
    build_prototypes_onehot,
    build_prototypes_true,
)
from .pseudo_label import PseudoLabeling, labeling_from_logits, pseudo_labels, softmax_rows
from .rog import RoGModel, fit_rog, rog_posterior
from .synth import ShiftSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BundleMeta",
    "FeatureBundle",
    "load_bundle",
    "save_bundle",
    "Prediction",
    "accuracy",
    "nearest_prototype",
    "PdaError",
    "NotFoundError",
    "FormatError",
    "SchemaError",
    "DataError",
    "IoError",
    "PreconditionError",
    "StateError",
    "McdConfig",
    "RobustEstimate",
    "fast_mcd",
    "METHODS",
    "PipelineConfig",
    "RunReport",
    "run_method",
    "run_all_methods",
    "PrototypeSet",
    "build_prototypes",
    "build_prototypes_onehot",
    "build_prototypes_true",
    "PseudoLabeling",
    "softmax_rows",
    "pseudo_labels",
    "labeling_from_logits",
    "RoGModel",
    "fit_rog",
    "rog_posterior",
    "ShiftSpec",
    "generate",
]
