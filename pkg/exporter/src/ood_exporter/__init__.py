"""Export CIFAR-10 ResNet-18 logits over OOD benchmark datasets."""

from .datasets import DATASET_NAMES, DatasetError
from .export import ExportError, ExportJob, ExportResult, export
from .model import CheckpointError, build_cifar_resnet18, load_checkpoint

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "DATASET_NAMES",
    "DatasetError",
    "ExportError",
    "ExportJob",
    "ExportResult",
    "build_cifar_resnet18",
    "export",
    "load_checkpoint",
]
