"""Command line for exporting benchmark logits."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .datasets import DATASET_NAMES, DatasetError
from .export import ExportError, ExportJob, export
from .formats import ExportFormatError
from .model import CheckpointError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ood-export",
        description="Run a pretrained CIFAR-10 ResNet-18 over a benchmark dataset "
        "and write logits (and labels for ID sets) in the toolkit's binary formats.",
    )
    parser.add_argument("--checkpoint", required=True, help="model state-dict path")
    parser.add_argument("--dataset", required=True, choices=list(DATASET_NAMES))
    parser.add_argument("--data-root", required=True, help="directory holding the datasets")
    parser.add_argument("--out-logits", required=True)
    parser.add_argument("--out-labels", help="labels output (ID sets only; default: logits path with .oody)")
    parser.add_argument("--manifest", help="manifest output (default: logits path with .manifest.json)")
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument("--filelist", help="OpenOOD-style file list overriding the stock split")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    job = ExportJob(
        checkpoint=Path(args.checkpoint),
        dataset=args.dataset,
        data_root=Path(args.data_root),
        out_logits=Path(args.out_logits),
        out_labels=Path(args.out_labels) if args.out_labels else None,
        manifest=Path(args.manifest) if args.manifest else None,
        batch_size=args.batch_size,
        filelist=Path(args.filelist) if args.filelist else None,
        device=args.device,
    )
    try:
        result = export(job)
    except (CheckpointError, DatasetError, ExportError, ExportFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"exported {result.n_samples} x {result.n_classes} logits to {result.logits_path}"
        + (f", labels to {result.labels_path}" if result.labels_path else "")
    )
    print(f"manifest: {result.manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
