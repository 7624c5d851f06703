"""CIFAR-style ResNet-18 construction and checkpoint loading."""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn
from torchvision.models import resnet18


class CheckpointError(RuntimeError):
    pass


def build_cifar_resnet18(num_classes: int = 10) -> nn.Module:
    """ResNet-18 with the usual 32x32 stem: 3x3 conv, no max-pool."""
    model = resnet18(weights=None, num_classes=num_classes)
    model.conv1 = nn.Conv2d(3, 64, kernel_size=3, stride=1, padding=1, bias=False)
    model.maxpool = nn.Identity()
    return model


def _unwrap_state_dict(payload):
    if isinstance(payload, dict):
        for key in ("state_dict", "model", "net"):
            if key in payload and isinstance(payload[key], dict):
                payload = payload[key]
                break
    if not isinstance(payload, dict):
        raise CheckpointError(f"checkpoint payload is a {type(payload).__name__}, not a state dict")
    # strip DataParallel-style prefixes
    return {k.removeprefix("module."): v for k, v in payload.items()}


def load_checkpoint(model: nn.Module, path) -> nn.Module:
    """Load weights into the model; the checkpoint must match exactly."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    state = _unwrap_state_dict(payload)
    try:
        model.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint does not match the model: {exc}") from None
    return model
