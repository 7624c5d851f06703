"""Batch inference over a benchmark dataset, written as logits/labels files."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch
import torchvision
from torch.utils.data import DataLoader

from . import formats
from .datasets import build_dataset, preprocessing_description, REGISTRY
from .model import build_cifar_resnet18, load_checkpoint

NUM_CLASSES = 10


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportJob:
    checkpoint: Path
    dataset: str
    data_root: Path
    out_logits: Path
    out_labels: Optional[Path] = None
    manifest: Optional[Path] = None
    batch_size: int = 256
    filelist: Optional[Path] = None
    device: str = "cpu"


@dataclass(frozen=True)
class ExportResult:
    n_samples: int
    n_classes: int
    logits_path: Path
    labels_path: Optional[Path]
    manifest_path: Path


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_inference(model, dataset, batch_size: int, device: str):
    """Forward the whole dataset in order; returns (logits, labels) arrays."""
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False, num_workers=0)
    model = model.to(device)
    model.eval()
    logits_chunks = []
    label_chunks = []
    with torch.no_grad():
        for images, labels in loader:
            logits_chunks.append(model(images.to(device)).cpu().numpy().astype(np.float32))
            label_chunks.append(np.asarray(labels, dtype=np.int64))
    if not logits_chunks:
        raise ExportError("dataset produced no batches")
    return np.concatenate(logits_chunks), np.concatenate(label_chunks)


def export(job: ExportJob) -> ExportResult:
    """Run the checkpoint over the dataset and write the wire-format files.

    One logits row per sample in dataset order. A labels file is written
    only for labeled ID sets; requesting one for an OOD set is an error.
    """
    if job.batch_size < 1:
        raise ExportError("batch_size must be positive")
    dataset, entry, split_source, deviation = build_dataset(
        job.dataset, job.data_root, job.filelist
    )
    model = build_cifar_resnet18(NUM_CLASSES)
    load_checkpoint(model, job.checkpoint)

    logits, labels = run_inference(model, dataset, job.batch_size, job.device)
    if logits.shape[1] != NUM_CLASSES:
        raise ExportError(f"model emitted {logits.shape[1]} classes, expected {NUM_CLASSES}")
    if not np.all(np.isfinite(logits)):
        raise ExportError("inference produced non-finite logits")

    out_logits = Path(job.out_logits)
    out_logits.parent.mkdir(parents=True, exist_ok=True)
    formats.write_logits(logits, out_logits)

    labels_path = None
    if entry.labeled:
        labels_path = Path(job.out_labels) if job.out_labels else out_logits.with_suffix(".oody")
        if np.any(labels < 0):
            raise ExportError(f"dataset {job.dataset!r} is marked labeled but yields no labels")
        formats.write_labels(labels, labels_path)
    elif job.out_labels is not None:
        raise ExportError(f"dataset {job.dataset!r} is an OOD set; no labels file is emitted")

    manifest_path = Path(job.manifest) if job.manifest else out_logits.with_suffix(".manifest.json")
    manifest = {
        "dataset": job.dataset,
        "split_source": split_source,
        "checkpoint_sha256": _sha256(job.checkpoint),
        "preprocessing": preprocessing_description(entry.grayscale),
        "n_samples": int(logits.shape[0]),
        "n_classes": int(logits.shape[1]),
        "batch_size": job.batch_size,
        "sample_order": "dataset order, no shuffling or augmentation",
        "torch_version": torch.__version__,
        "torchvision_version": torchvision.__version__,
        "files": {
            "logits": out_logits.name,
            "labels": labels_path.name if labels_path else None,
        },
    }
    if deviation:
        manifest["deviation"] = deviation
    manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")
    return ExportResult(
        n_samples=int(logits.shape[0]),
        n_classes=int(logits.shape[1]),
        logits_path=out_logits,
        labels_path=labels_path,
        manifest_path=manifest_path,
    )


def dataset_is_labeled(name: str) -> bool:
    if name not in REGISTRY:
        raise ExportError(f"unknown dataset {name!r}")
    return REGISTRY[name].labeled
