import numpy as np
import pytest
import torch
from PIL import Image
from torch import nn
from torchvision import models

from pda_exporter.model import Bottleneck

NUM_CLASSES = 2
IMAGES_PER_CLASS = 5


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """Ten 64x64 RGB images across two class subdirectories."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for cls in ("alpha", "beta"):
        (root / cls).mkdir()
        for i in range(IMAGES_PER_CLASS):
            pixels = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
            Image.fromarray(pixels).save(root / cls / f"img{i}.png")
    return root


@pytest.fixture(scope="session")
def plain_checkpoint(tmp_path_factory):
    """Random-weight resnet18 with a 2-class fc head."""
    torch.manual_seed(0)
    model = models.resnet18(weights=None, num_classes=NUM_CLASSES)
    path = tmp_path_factory.mktemp("ckpt") / "resnet18.pt"
    torch.save(model.state_dict(), path)
    return path


@pytest.fixture(scope="session")
def composite_checkpoint(tmp_path_factory):
    """Backbone + 32-d bottleneck + linear classifier composite."""
    torch.manual_seed(1)
    trunk = models.resnet18(weights=None)
    backbone_dim = trunk.fc.in_features
    trunk.fc = nn.Identity()
    bottleneck = Bottleneck(backbone_dim, 32)
    classifier = nn.Linear(32, NUM_CLASSES)
    path = tmp_path_factory.mktemp("ckpt") / "composite.pt"
    torch.save(
        {
            "backbone": trunk.state_dict(),
            "bottleneck": bottleneck.state_dict(),
            "classifier": classifier.state_dict(),
        },
        path,
    )
    return path
