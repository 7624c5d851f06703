import numpy as np
import pytest
import torch
from PIL import Image

from ood_exporter.model import build_cifar_resnet18


@pytest.fixture(scope="session")
def checkpoint_path(tmp_path_factory):
    """Deterministically initialized model weights saved as a state dict."""
    torch.manual_seed(1234)
    model = build_cifar_resnet18()
    path = tmp_path_factory.mktemp("ck") / "resnet18_cifar10.pt"
    torch.save(model.state_dict(), path)
    return path


def write_image_tree(root, classes, per_class, rng, size=64):
    for name in classes:
        class_dir = root / name
        class_dir.mkdir(parents=True)
        for i in range(per_class):
            pixels = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
            Image.fromarray(pixels, "RGB").save(class_dir / f"img_{i:03d}.png")


@pytest.fixture(scope="session")
def fake_data_root(tmp_path_factory):
    """data_root with a small ImageFolder tree standing in for tinyimagenet."""
    root = tmp_path_factory.mktemp("data")
    rng = np.random.default_rng(7)
    write_image_tree(root / "tinyimagenet", ("n01", "n02", "n03"), 4, rng)
    return root


@pytest.fixture(scope="session")
def fake_id_root(tmp_path_factory):
    """ImageFolder tree with ten classes, used as a stand-in ID dataset."""
    root = tmp_path_factory.mktemp("iddata")
    rng = np.random.default_rng(8)
    write_image_tree(root / "fake_id", tuple(f"c{i}" for i in range(10)), 3, rng, size=32)
    return root
