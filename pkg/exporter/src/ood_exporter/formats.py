"""Writers for the toolkit's binary wire formats.

Deliberately self-contained: the byte layout below is the contract
shared with the scoring toolkit, and this module is the exporter-side
implementation of it.

  logits  "OODL" | u32 version=1 | u64 n_rows | u64 n_cols | f32 payload (LE, row-major)
  labels  "OODY" | u32 version=1 | u64 n_rows | i32 payload (LE)
"""

from __future__ import annotations

import struct

import numpy as np

LOGITS_MAGIC = b"OODL"
LABELS_MAGIC = b"OODY"
FORMAT_VERSION = 1


class ExportFormatError(ValueError):
    pass


def write_logits(values: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
        raise ExportFormatError(f"logits must be N x C with N >= 1, C >= 2, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ExportFormatError("logits payload contains non-finite values")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQQ", LOGITS_MAGIC, FORMAT_VERSION, *arr.shape))
        fh.write(arr.tobytes(order="C"))


def write_labels(values: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(values, dtype="<i4")
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ExportFormatError(f"labels must be a nonempty vector, got shape {arr.shape}")
    if np.any(arr < 0):
        raise ExportFormatError("labels must be nonnegative")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQ", LABELS_MAGIC, FORMAT_VERSION, arr.shape[0]))
        fh.write(arr.tobytes(order="C"))
