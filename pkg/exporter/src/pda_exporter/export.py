"""Run a pretrained backbone over an image folder and write a feature bundle.

The output directory follows the bundle contract consumed by the numerical
core: features.npy / logits.npy / labels.npy in the simple binary array
container (version 1.0, little-endian, C order) plus a flat meta.json.
Features are taken where the classifier head reads them by default; the
`layer` switch exposes the pre-bottleneck pooled representation instead.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader
from torchvision import datasets, transforms

from .bn import recalibrate_full, recalibrate_momentum
from .errors import DatasetError
from .model import ExportModel, load_export_model

logger = logging.getLogger(__name__)

BN_MODES = ("off", "full", "momentum")
LAYERS = ("penultimate", "backbone")

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ExportSpec:
    """One export job: checkpoint + dataset -> bundle directory."""

    checkpoint: str
    data_root: str
    domain: str
    backbone: str
    out: str
    batch_size: int = 32
    bn_mode: str = "off"
    bn_momentum: float = 0.1
    layer: str = "penultimate"
    device: str = "cpu"

    def validate(self) -> None:
        if self.bn_mode not in BN_MODES:
            raise DatasetError(f"bn_mode must be one of {BN_MODES}, got {self.bn_mode!r}")
        if self.layer not in LAYERS:
            raise DatasetError(f"layer must be one of {LAYERS}, got {self.layer!r}")
        if self.batch_size < 1:
            raise DatasetError("batch_size must be positive")


def eval_transform() -> transforms.Compose:
    """Standard benchmark evaluation preprocessing."""
    return transforms.Compose([
        transforms.Resize(256),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
    ])


def _make_loader(spec: ExportSpec) -> DataLoader:
    root = Path(spec.data_root)
    if not root.is_dir():
        raise DatasetError(f"dataset root does not exist: {root}")
    try:
        dataset = datasets.ImageFolder(root, transform=eval_transform())
    except (FileNotFoundError, RuntimeError) as exc:
        raise DatasetError(f"not a class-per-subdirectory image folder: {exc}") from exc
    # shuffle=False + workers=0 keeps the export order (and therefore the
    # bundle bytes) deterministic
    return DataLoader(dataset, batch_size=spec.batch_size, shuffle=False,
                      num_workers=0)


def _write_npy(path: Path, arr: np.ndarray) -> None:
    with open(path, "wb") as fp:
        np.lib.format.write_array(fp, np.ascontiguousarray(arr), version=(1, 0))


@torch.no_grad()
def _extract(model: ExportModel, loader: DataLoader, spec: ExportSpec,
             device: torch.device):
    feats, logits, labels = [], [], []
    model.eval()
    for batch, target in loader:
        pooled, head_input, batch_logits = model(batch.to(device))
        chosen = pooled if spec.layer == "backbone" else head_input
        feats.append(chosen.cpu().to(torch.float32).numpy())
        logits.append(batch_logits.cpu().to(torch.float32).numpy())
        labels.append(target.numpy())
    return (np.concatenate(feats), np.concatenate(logits),
            np.concatenate(labels).astype(np.int64))


def export(spec: ExportSpec) -> Path:
    """Execute the export job; returns the bundle directory path."""
    spec.validate()
    device = torch.device(spec.device)
    model = load_export_model(spec.checkpoint, spec.backbone).to(device)
    loader = _make_loader(spec)

    classes = loader.dataset.classes
    if len(classes) > model.num_classes:
        raise DatasetError(
            f"dataset has {len(classes)} class folders but the checkpoint "
            f"classifies only {model.num_classes} classes"
        )
    if len(classes) < model.num_classes:
        logger.warning("dataset covers %d of %d checkpoint classes",
                       len(classes), model.num_classes)

    if spec.bn_mode == "full":
        recalibrate_full(model, loader, device)
    elif spec.bn_mode == "momentum":
        recalibrate_momentum(model, loader, device, spec.bn_momentum)

    features, logits, labels = _extract(model, loader, spec, device)
    feature_dim = features.shape[1]

    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_npy(out / "features.npy", features)
    _write_npy(out / "logits.npy", logits)
    _write_npy(out / "labels.npy", labels)
    meta = {
        "num_classes": model.num_classes,
        "feature_dim": int(feature_dim),
        "domain": spec.domain,
        "backbone": spec.backbone,
    }
    if len(classes) == model.num_classes:
        meta["class_names"] = list(classes)
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n",
                                   encoding="utf-8")
    logger.info("exported N=%d D=%d C=%d to %s", features.shape[0], feature_dim,
                model.num_classes, out)
    return out
