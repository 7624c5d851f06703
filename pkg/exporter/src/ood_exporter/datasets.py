"""Benchmark dataset registry and shared preprocessing.

Every dataset is resized to 32x32 and normalized with the CIFAR-10
training statistics, matching what the checkpoint saw; grayscale
sources are replicated to three channels first. Labels are exported
only for the ID sets (the CIFAR-10 splits); OOD labels, where they
exist, belong to foreign class vocabularies.

An OpenOOD-style file list ("relative/path [label]" per line) can
replace the stock torchvision split, which is how the published
overlap-removed Places365 split is applied when available.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from PIL import Image
from torch.utils.data import Dataset
from torchvision import datasets as tvd
from torchvision import transforms

CIFAR10_MEAN = (0.4914, 0.4822, 0.4465)
CIFAR10_STD = (0.2470, 0.2435, 0.2616)
IMAGE_SIZE = 32


class DatasetError(RuntimeError):
    pass


def eval_transform(grayscale: bool = False) -> transforms.Compose:
    steps = []
    if grayscale:
        steps.append(transforms.Grayscale(num_output_channels=3))
    steps += [
        transforms.Resize((IMAGE_SIZE, IMAGE_SIZE)),
        transforms.ToTensor(),
        transforms.Normalize(CIFAR10_MEAN, CIFAR10_STD),
    ]
    return transforms.Compose(steps)


def preprocessing_description(grayscale: bool = False) -> list[str]:
    steps = ["grayscale->3ch"] if grayscale else []
    return steps + [
        f"resize {IMAGE_SIZE}x{IMAGE_SIZE}",
        f"normalize mean={CIFAR10_MEAN} std={CIFAR10_STD}",
    ]


class FileListDataset(Dataset):
    """Images listed one per line as 'relative/path [label]'."""

    def __init__(self, data_root, list_path, transform):
        self.root = Path(data_root)
        self.transform = transform
        self.entries: list[tuple[str, int]] = []
        for line in Path(list_path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            label = int(parts[1]) if len(parts) > 1 else -1
            self.entries.append((parts[0], label))
        if not self.entries:
            raise DatasetError(f"file list {list_path} is empty")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, index):
        rel_path, label = self.entries[index]
        image = Image.open(self.root / rel_path).convert("RGB")
        return self.transform(image), label


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    labeled: bool
    grayscale: bool
    source: str
    builder: Callable
    deviation_note: Optional[str] = None


def _wrap_missing(name: str, build: Callable) -> Callable:
    def builder(data_root, transform):
        try:
            return build(data_root, transform)
        except (RuntimeError, FileNotFoundError) as exc:
            raise DatasetError(f"dataset {name!r} not available under {data_root}: {exc}") from None

    return builder


REGISTRY: dict[str, DatasetEntry] = {}


def _register(name, labeled, grayscale, source, build, deviation_note=None):
    REGISTRY[name] = DatasetEntry(
        name=name,
        labeled=labeled,
        grayscale=grayscale,
        source=source,
        builder=_wrap_missing(name, build),
        deviation_note=deviation_note,
    )


_register(
    "cifar10-train", True, False, "torchvision.CIFAR10(train)",
    lambda root, t: tvd.CIFAR10(root, train=True, download=False, transform=t),
)
_register(
    "cifar10-test", True, False, "torchvision.CIFAR10(test)",
    lambda root, t: tvd.CIFAR10(root, train=False, download=False, transform=t),
)
_register(
    "cifar100", False, False, "torchvision.CIFAR100(test)",
    lambda root, t: tvd.CIFAR100(root, train=False, download=False, transform=t),
)
_register(
    "tinyimagenet", False, False, "ImageFolder(<data-root>/tinyimagenet)",
    lambda root, t: tvd.ImageFolder(str(Path(root) / "tinyimagenet"), transform=t),
)
_register(
    "mnist", False, True, "torchvision.MNIST(test)",
    lambda root, t: tvd.MNIST(root, train=False, download=False, transform=t),
)
_register(
    "svhn", False, False, "torchvision.SVHN(test)",
    lambda root, t: tvd.SVHN(root, split="test", download=False, transform=t),
)
_register(
    "texture", False, False, "torchvision.DTD(test)",
    lambda root, t: tvd.DTD(root, split="test", download=False, transform=t),
    deviation_note="stock DTD test split; benchmark file list not applied",
)
_register(
    "places365", False, False, "torchvision.Places365(val, small)",
    lambda root, t: tvd.Places365(root, split="val", small=True, download=False, transform=t),
    deviation_note="full val split; overlap-removal file list not applied",
)

DATASET_NAMES = tuple(REGISTRY)


def build_dataset(name: str, data_root, filelist=None):
    """Return (torch dataset, entry, split_source, deviation_note or None)."""
    if name not in REGISTRY:
        raise DatasetError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    entry = REGISTRY[name]
    transform = eval_transform(entry.grayscale)
    if filelist is not None:
        dataset = FileListDataset(data_root, filelist, transform)
        return dataset, entry, f"filelist:{filelist}", None
    dataset = entry.builder(data_root, transform)
    return dataset, entry, entry.source, entry.deviation_note
