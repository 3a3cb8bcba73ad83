"""Batch-norm statistics recalibration on a target dataset.

`recalibrate_full` replaces every BN running mean/variance with the exact
per-channel statistics of the inputs each BN layer sees during one sweep
over the full target set, accumulated in float64 through forward
pre-hooks. BN layers run in training mode during the sweep so downstream
activations reflect target statistics; no parameter receives a gradient.

`recalibrate_momentum` is the conventional partial-update variant kept for
comparison: reset, then let torch's own momentum update run for one sweep.
"""

from __future__ import annotations

import logging

import torch
from torch import nn
from torch.nn.modules.batchnorm import _BatchNorm

logger = logging.getLogger(__name__)


def bn_layers(model: nn.Module) -> list[_BatchNorm]:
    return [m for m in model.modules() if isinstance(m, _BatchNorm)]


def _channel_dims(x: torch.Tensor) -> tuple[int, ...]:
    # BatchNorm normalizes over every dim except the channel dim (1)
    return (0,) + tuple(range(2, x.dim()))


def _bn_train_only(model: nn.Module) -> None:
    model.eval()
    for layer in bn_layers(model):
        layer.train()


@torch.no_grad()
def recalibrate_full(model: nn.Module, loader, device: torch.device) -> None:
    """Exact full-dataset BN statistics from one forward sweep."""
    layers = bn_layers(model)
    if not layers:
        logger.warning("model has no batch-norm layers; recalibration is a no-op")
        return
    acc = {layer: None for layer in layers}

    def make_hook(layer):
        def hook(module, inputs):
            x = inputs[0].detach().to(torch.float64)
            dims = _channel_dims(x)
            count = x.numel() // x.shape[1]
            s = x.sum(dim=dims)
            sq = (x * x).sum(dim=dims)
            if acc[layer] is None:
                acc[layer] = [s, sq, count]
            else:
                acc[layer][0] += s
                acc[layer][1] += sq
                acc[layer][2] += count

        return hook

    handles = [layer.register_forward_pre_hook(make_hook(layer)) for layer in layers]
    _bn_train_only(model)
    try:
        for batch, _ in loader:
            if batch.shape[0] < 2:
                # train-mode BN cannot normalize a single example; its
                # contribution to full-set statistics is negligible
                logger.warning("skipping a size-1 batch during BN recalibration")
                continue
            model(batch.to(device))
    finally:
        for handle in handles:
            handle.remove()
        model.eval()

    for layer in layers:
        if acc[layer] is None:
            continue
        s, sq, count = acc[layer]
        mean = s / count
        var = torch.clamp(sq / count - mean * mean, min=0.0)  # population variance
        layer.running_mean.copy_(mean.to(layer.running_mean.dtype))
        layer.running_var.copy_(var.to(layer.running_var.dtype))
        if layer.num_batches_tracked is not None:
            layer.num_batches_tracked.fill_(1)


@torch.no_grad()
def recalibrate_momentum(model: nn.Module, loader, device: torch.device,
                         momentum: float = 0.1) -> None:
    """Conventional momentum-based partial update over one sweep."""
    layers = bn_layers(model)
    for layer in layers:
        layer.reset_running_stats()
        layer.momentum = momentum
    _bn_train_only(model)
    try:
        for batch, _ in loader:
            if batch.shape[0] < 2:
                logger.warning("skipping a size-1 batch during BN recalibration")
                continue
            model(batch.to(device))
    finally:
        model.eval()
