"""Backbone construction and checkpoint loading.

Two checkpoint layouts are supported:

* a plain torchvision ResNet state dict (classifier in `fc`);
* a composite dict {"backbone": ..., "classifier": ..., optional
  "bottleneck": ...} where the bottleneck is Linear + BatchNorm1d between
  the pooled backbone features and the classifier, as used by common
  source-free adaptation codebases.

The wrapped model exposes pooled backbone features, the representation the
classifier head consumes ("penultimate"), and the logits in one forward.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn
from torchvision import models

from .errors import CheckpointError

BACKBONES = ("resnet18", "resnet34", "resnet50", "resnet101")


class Bottleneck(nn.Module):
    """Linear projection with feature-wise batch norm."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.linear = nn.Linear(in_dim, out_dim)
        self.bn = nn.BatchNorm1d(out_dim)

    def forward(self, x):
        return self.bn(self.linear(x))


class ExportModel(nn.Module):
    """Backbone [+ bottleneck] + classifier, with feature taps."""

    def __init__(self, backbone: nn.Module, classifier: nn.Module,
                 bottleneck: nn.Module | None, backbone_dim: int,
                 head_dim: int, num_classes: int):
        super().__init__()
        self.backbone = backbone
        self.bottleneck = bottleneck
        self.classifier = classifier
        self.backbone_dim = backbone_dim
        self.head_dim = head_dim
        self.num_classes = num_classes

    def forward(self, x):
        pooled = self.backbone(x)
        head_input = self.bottleneck(pooled) if self.bottleneck is not None else pooled
        logits = self.classifier(head_input)
        return pooled, head_input, logits


def _build_trunk(backbone_id: str) -> tuple[nn.Module, int]:
    if backbone_id not in BACKBONES:
        raise CheckpointError(f"unsupported backbone id {backbone_id!r}, "
                              f"expected one of {BACKBONES}")
    trunk = models.get_model(backbone_id, weights=None)
    backbone_dim = trunk.fc.in_features
    return trunk, backbone_dim


def _load_into(module: nn.Module, state_dict: dict, what: str) -> None:
    try:
        module.load_state_dict(state_dict, strict=True)
    except RuntimeError as exc:
        raise CheckpointError(f"{what} does not match the requested "
                              f"architecture: {exc}") from exc


def load_export_model(checkpoint_path: str | Path, backbone_id: str) -> ExportModel:
    """Build the model for `backbone_id` and load the checkpoint into it."""
    path = Path(checkpoint_path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint does not exist: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if isinstance(payload, dict) and "backbone" in payload and "classifier" in payload:
        return _load_composite(payload, backbone_id)
    if isinstance(payload, dict) and any(k.startswith("conv1") for k in payload):
        return _load_plain(payload, backbone_id)
    raise CheckpointError(
        f"unrecognized checkpoint layout in {path}: expected a torchvision "
        "ResNet state dict or a backbone/bottleneck/classifier composite"
    )


def _load_plain(state_dict: dict, backbone_id: str) -> ExportModel:
    if "fc.weight" not in state_dict:
        raise CheckpointError("plain checkpoint lacks a classifier head (fc.weight)")
    num_classes = state_dict["fc.weight"].shape[0]
    trunk, backbone_dim = _build_trunk(backbone_id)
    trunk.fc = nn.Linear(backbone_dim, num_classes)
    _load_into(trunk, state_dict, "checkpoint")
    classifier = trunk.fc
    trunk.fc = nn.Identity()
    return ExportModel(backbone=trunk, classifier=classifier, bottleneck=None,
                       backbone_dim=backbone_dim, head_dim=backbone_dim,
                       num_classes=num_classes)


def _load_composite(payload: dict, backbone_id: str) -> ExportModel:
    trunk, backbone_dim = _build_trunk(backbone_id)
    trunk.fc = nn.Identity()
    _load_into(trunk, payload["backbone"], "composite backbone")

    bottleneck = None
    head_dim = backbone_dim
    if payload.get("bottleneck"):
        bn_sd = payload["bottleneck"]
        if "linear.weight" not in bn_sd:
            raise CheckpointError("composite bottleneck lacks linear.weight")
        head_dim = bn_sd["linear.weight"].shape[0]
        bottleneck = Bottleneck(backbone_dim, head_dim)
        _load_into(bottleneck, bn_sd, "composite bottleneck")

    cls_sd = payload["classifier"]
    if "weight" not in cls_sd:
        raise CheckpointError("composite classifier lacks weight")
    num_classes, cls_in = cls_sd["weight"].shape
    if cls_in != head_dim:
        raise CheckpointError(
            f"classifier expects {cls_in}-d inputs but the head provides {head_dim}"
        )
    classifier = nn.Linear(cls_in, num_classes, bias="bias" in cls_sd)
    _load_into(classifier, cls_sd, "composite classifier")
    return ExportModel(backbone=trunk, classifier=classifier, bottleneck=bottleneck,
                       backbone_dim=backbone_dim, head_dim=head_dim,
                       num_classes=num_classes)
