"""Feature-bundle directory I/O.

A bundle directory is the on-disk contract between the numerical core and
any feature exporter:

    features.npy   N x D float32/float64, the extracted feature vectors
    logits.npy     N x C float32/float64, pre-softmax classifier outputs
    labels.npy     optional length-N int64 ground-truth labels
    meta.json      flat JSON record: num_classes, feature_dim, domain,
                   backbone, optional class_names

Array files are plain binary array containers, version 1.0 header only,
little-endian, C-contiguous. Anything else is rejected with FormatError.
Arrays may be stored in 32-bit floats; downstream accumulation is always
performed in 64-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format

from .errors import DataError, FormatError, IoError, NotFoundError, SchemaError

FEATURES_FILE = "features.npy"
LOGITS_FILE = "logits.npy"
LABELS_FILE = "labels.npy"
META_FILE = "meta.json"

_FLOAT_DTYPES = (np.dtype("<f4"), np.dtype("<f8"))
_LABEL_DTYPES = (np.dtype("<i8"),)


@dataclass(frozen=True)
class BundleMeta:
    """Human-inspectable bundle metadata."""

    num_classes: int
    feature_dim: int
    domain: str
    backbone: str
    class_names: list[str] | None = None

    def to_dict(self) -> dict:
        d = {
            "num_classes": self.num_classes,
            "feature_dim": self.feature_dim,
            "domain": self.domain,
            "backbone": self.backbone,
        }
        if self.class_names is not None:
            d["class_names"] = list(self.class_names)
        return d


@dataclass(frozen=True)
class FeatureBundle:
    """A target dataset as extracted features plus classifier logits.

    Immutable once constructed; safe to share read-only across threads.
    """

    features: np.ndarray
    logits: np.ndarray
    meta: BundleMeta
    labels: np.ndarray | None = field(default=None)

    @property
    def num_examples(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return self.meta.num_classes

    @property
    def feature_dim(self) -> int:
        return self.meta.feature_dim


def validate_bundle(bundle: FeatureBundle) -> None:
    """Check every bundle invariant, raising a typed error on violation."""
    f, z, y, m = bundle.features, bundle.logits, bundle.labels, bundle.meta
    if f.ndim != 2 or z.ndim != 2:
        raise SchemaError("features and logits must be 2-d arrays")
    n, d = f.shape
    if n < 1:
        raise SchemaError("bundle must contain at least one example")
    if z.shape[0] != n:
        raise SchemaError(f"row mismatch: features has {n} rows, logits has {z.shape[0]}")
    if not isinstance(m.num_classes, int) or not isinstance(m.feature_dim, int):
        raise SchemaError("meta num_classes and feature_dim must be integers")
    if m.num_classes < 2:
        raise SchemaError(f"num_classes must be >= 2, got {m.num_classes}")
    if d < 1 or m.feature_dim != d:
        raise SchemaError(f"feature_dim mismatch: meta says {m.feature_dim}, features have {d}")
    if z.shape[1] != m.num_classes:
        raise SchemaError(f"logits have {z.shape[1]} columns, meta says {m.num_classes} classes")
    if m.class_names is not None and len(m.class_names) != m.num_classes:
        raise SchemaError("class_names length does not match num_classes")
    if not np.isfinite(f).all():
        raise DataError("features contain NaN or Inf")
    if not np.isfinite(z).all():
        raise DataError("logits contain NaN or Inf")
    if y is not None:
        if y.ndim != 1 or y.shape[0] != n:
            raise SchemaError(f"labels must be a length-{n} vector")
        if y.size and (y.min() < 0 or y.max() >= m.num_classes):
            raise DataError("labels outside [0, num_classes)")


def _read_array(path: Path, allowed_dtypes: tuple[np.dtype, ...], ndim: int) -> np.ndarray:
    if not path.is_file():
        raise NotFoundError(f"missing array file: {path}")
    try:
        with open(path, "rb") as fp:
            try:
                version = npy_format.read_magic(fp)
            except ValueError as exc:
                raise FormatError(f"{path}: not a binary array container ({exc})") from exc
            if version != (1, 0):
                raise FormatError(f"{path}: unsupported container version {version}, need 1.0")
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(fp)
            if fortran_order:
                raise FormatError(f"{path}: Fortran-order arrays are not supported")
            if dtype not in allowed_dtypes:
                raise FormatError(f"{path}: unsupported dtype {dtype}")
            count = math.prod(shape)
            data = np.fromfile(fp, dtype=dtype, count=count)
            if data.size != count or fp.read(1):
                raise FormatError(f"{path}: payload size does not match header shape {shape}")
    except OSError as exc:
        raise IoError(f"failed to read {path}: {exc}") from exc
    if len(shape) != ndim:
        raise SchemaError(f"{path}: expected a {ndim}-d array, got shape {shape}")
    arr = data.reshape(shape)
    arr.flags.writeable = False
    return arr


def _write_array(path: Path, arr: np.ndarray) -> None:
    try:
        with open(path, "wb") as fp:
            npy_format.write_array(fp, np.ascontiguousarray(arr), version=(1, 0))
    except OSError as exc:
        raise IoError(f"failed to write {path}: {exc}") from exc


def _read_meta(path: Path) -> BundleMeta:
    if not path.is_file():
        raise NotFoundError(f"missing meta record: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"failed to read {path}: {exc}") from exc
    try:
        record = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(record, dict):
        raise FormatError(f"{path}: meta record must be a JSON object")
    missing = {"num_classes", "feature_dim", "domain", "backbone"} - record.keys()
    if missing:
        raise SchemaError(f"{path}: missing required meta keys {sorted(missing)}")
    num_classes, feature_dim = record["num_classes"], record["feature_dim"]
    if not isinstance(num_classes, int) or not isinstance(feature_dim, int):
        raise SchemaError(f"{path}: num_classes and feature_dim must be integers")
    class_names = record.get("class_names")
    if class_names is not None and (
        not isinstance(class_names, list) or not all(isinstance(c, str) for c in class_names)
    ):
        raise SchemaError(f"{path}: class_names must be a list of strings")
    return BundleMeta(
        num_classes=num_classes,
        feature_dim=feature_dim,
        domain=str(record["domain"]),
        backbone=str(record["backbone"]),
        class_names=class_names,
    )


def write_array(path: str | Path, arr: np.ndarray) -> None:
    """Write one array in the bundle container format (version 1.0, C order)."""
    _write_array(Path(path), arr)


def read_int_array(path: str | Path) -> np.ndarray:
    """Read a length-N int64 vector (e.g. stored predictions or labels)."""
    return _read_array(Path(path), _LABEL_DTYPES, ndim=1)


def load_bundle(path: str | Path) -> FeatureBundle:
    """Load and validate a bundle directory.

    Raises NotFoundError for missing files, FormatError for unsupported
    array containers, SchemaError for shape/field mismatches and DataError
    for non-finite or out-of-range values.
    """
    root = Path(path)
    if not root.is_dir():
        raise NotFoundError(f"bundle directory does not exist: {root}")
    features = _read_array(root / FEATURES_FILE, _FLOAT_DTYPES, ndim=2)
    logits = _read_array(root / LOGITS_FILE, _FLOAT_DTYPES, ndim=2)
    labels_path = root / LABELS_FILE
    labels = _read_array(labels_path, _LABEL_DTYPES, ndim=1) if labels_path.is_file() else None
    meta = _read_meta(root / META_FILE)
    bundle = FeatureBundle(features=features, logits=logits, labels=labels, meta=meta)
    validate_bundle(bundle)
    return bundle


def save_bundle(bundle: FeatureBundle, path: str | Path) -> None:
    """Write a validated bundle; load_bundle reproduces it bit-exactly."""
    validate_bundle(bundle)
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create bundle directory {root}: {exc}") from exc
    features = bundle.features
    logits = bundle.logits
    if features.dtype not in _FLOAT_DTYPES:
        features = features.astype(np.float64)
    if logits.dtype not in _FLOAT_DTYPES:
        logits = logits.astype(np.float64)
    _write_array(root / FEATURES_FILE, features)
    _write_array(root / LOGITS_FILE, logits)
    if bundle.labels is not None:
        _write_array(root / LABELS_FILE, bundle.labels.astype(np.int64, copy=False))
    try:
        (root / META_FILE).write_text(
            json.dumps(bundle.meta.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"failed to write {root / META_FILE}: {exc}") from exc
