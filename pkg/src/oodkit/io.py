"""File formats for logits, labels, fitted matrices, and scores.

These formats are the wire contract with external exporters, so the
binary layouts are fixed and validated byte for byte:

  logits  "OODL" | u32 version=1 | u64 n_rows | u64 n_cols | f32[n_rows*n_cols]
  labels  "OODY" | u32 version=1 | u64 n_rows | i32[n_rows]

All integers and floats are little-endian; the float payload is
row-major. The fitted matrix travels as JSON (floats serialized via
repr, which round-trips float64 exactly), and scores as CSV with a
leading metadata comment line.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import ClassRelevanceMatrix, LabelVector, LogitsMatrix, ScoreSet
from .errors import (
    BadMagicError,
    BadVersionError,
    CsvParseError,
    FormatError,
    InvalidInputError,
    NonFiniteValueError,
    PayloadTooLargeError,
    TrailingBytesError,
    TruncatedPayloadError,
)

LOGITS_MAGIC = b"OODL"
LABELS_MAGIC = b"OODY"
FORMAT_VERSION = 1

# refuse to allocate payloads larger than this unless the caller raises the cap
DEFAULT_MAX_PAYLOAD_BYTES = 8 * 1024**3

_HEADER = struct.Struct("<4sI")
_U64 = struct.Struct("<Q")


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) < n:
        raise TruncatedPayloadError(f"file ends inside {what}: wanted {n} bytes, got {len(buf)}")
    return buf


def _read_header(fh, magic: bytes, path) -> int:
    """Validate magic and version, return nothing useful beyond side effects."""
    raw = _read_exact(fh, _HEADER.size, "header")
    got_magic, version = _HEADER.unpack(raw)
    if got_magic != magic:
        raise BadMagicError(f"{path}: expected magic {magic!r}, found {got_magic!r}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"{path}: unsupported version {version}, expected {FORMAT_VERSION}")
    return version


def _read_payload(fh, expected: int, path) -> bytes:
    if expected > 0:
        payload = _read_exact(fh, expected, "payload")
    else:
        payload = b""
    extra = fh.read(1)
    if extra:
        raise TrailingBytesError(f"{path}: trailing bytes after declared payload")
    return payload


def write_logits(matrix: LogitsMatrix, path) -> None:
    """Write a logits matrix; values are stored as 32-bit floats."""
    with np.errstate(over="ignore"):
        data32 = matrix.data.astype("<f4")
    if not np.all(np.isfinite(data32)):
        raise InvalidInputError("logits overflow 32-bit float range")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(LOGITS_MAGIC, FORMAT_VERSION))
        fh.write(_U64.pack(matrix.n_samples))
        fh.write(_U64.pack(matrix.n_classes))
        fh.write(data32.tobytes(order="C"))


def read_logits(path, max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES) -> LogitsMatrix:
    """Read a logits file, validating every declared size before allocating."""
    with open(path, "rb") as fh:
        _read_header(fh, LOGITS_MAGIC, path)
        n_rows = _U64.unpack(_read_exact(fh, 8, "row count"))[0]
        n_cols = _U64.unpack(_read_exact(fh, 8, "column count"))[0]
        if n_rows < 1:
            raise FormatError(f"{path}: declared n_rows={n_rows}, need at least 1")
        if n_cols < 2:
            raise FormatError(f"{path}: declared n_cols={n_cols}, need at least 2")
        payload_len = 4 * n_rows * n_cols
        if payload_len > max_payload_bytes:
            raise PayloadTooLargeError(
                f"{path}: declared payload of {payload_len} bytes exceeds cap {max_payload_bytes}"
            )
        payload = _read_payload(fh, payload_len, path)
    values = np.frombuffer(payload, dtype="<f4").reshape(n_rows, n_cols)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    return LogitsMatrix(values.astype(np.float64))


def write_labels(labels: LabelVector, path) -> None:
    arr = labels.labels
    if np.any(arr > np.iinfo(np.int32).max):
        raise InvalidInputError("labels exceed signed 32-bit range")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(LABELS_MAGIC, FORMAT_VERSION))
        fh.write(_U64.pack(labels.n_samples))
        fh.write(arr.astype("<i4").tobytes(order="C"))


def read_labels(path, max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES) -> LabelVector:
    with open(path, "rb") as fh:
        _read_header(fh, LABELS_MAGIC, path)
        n_rows = _U64.unpack(_read_exact(fh, 8, "row count"))[0]
        if n_rows < 1:
            raise FormatError(f"{path}: declared n_rows={n_rows}, need at least 1")
        payload_len = 4 * n_rows
        if payload_len > max_payload_bytes:
            raise PayloadTooLargeError(
                f"{path}: declared payload of {payload_len} bytes exceeds cap {max_payload_bytes}"
            )
        payload = _read_payload(fh, payload_len, path)
    values = np.frombuffer(payload, dtype="<i4")
    if np.any(values < 0):
        raise FormatError(f"{path}: labels must be nonnegative")
    return LabelVector(values.astype(np.int64))


def read_csv_logits(path, has_header: bool = False) -> LogitsMatrix:
    """Parse comma-separated numeric rows of equal length into a logits matrix."""
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        for i, cells in enumerate(reader, start=1):
            if i == 1 and has_header:
                continue
            if not cells:
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise CsvParseError(
                    f"{path}: expected {width} columns, got {len(cells)}", row=i
                )
            parsed = []
            for j, cell in enumerate(cells, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: not a number: {cell!r}", row=i, column=j
                    ) from None
            rows.append(parsed)
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    return LogitsMatrix(np.array(rows, dtype=np.float64))


def write_crm(crm: ClassRelevanceMatrix, path) -> None:
    """Serialize a fitted matrix as JSON with exactly round-tripping floats."""
    document = {
        "format_version": FORMAT_VERSION,
        "n_classes": crm.n_classes,
        "per_class_counts": [int(v) for v in crm.per_class_counts],
        "prototypes_logits": [[float(v) for v in row] for row in crm.prototypes_logits],
        "prototypes_prob": [[float(v) for v in row] for row in crm.prototypes_prob],
    }
    with open(path, "w") as fh:
        json.dump(document, fh, indent=1)
        fh.write("\n")


def read_crm(path) -> ClassRelevanceMatrix:
    with open(path, "r") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise FormatError(f"{path}: expected a JSON object")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"{path}: unsupported format_version {version!r}")
    for key in ("n_classes", "per_class_counts", "prototypes_logits", "prototypes_prob"):
        if key not in document:
            raise FormatError(f"{path}: missing key {key!r}")
    try:
        crm = ClassRelevanceMatrix(
            prototypes_logits=np.array(document["prototypes_logits"], dtype=np.float64),
            prototypes_prob=np.array(document["prototypes_prob"], dtype=np.float64),
            per_class_counts=np.array(document["per_class_counts"], dtype=np.int64),
        )
    except (InvalidInputError, ValueError) as exc:
        raise FormatError(f"{path}: invalid matrix document: {exc}") from None
    if crm.n_classes != int(document["n_classes"]):
        raise FormatError(
            f"{path}: declared n_classes={document['n_classes']} but rows say {crm.n_classes}"
        )
    return crm


def write_scores_csv(scores: ScoreSet, path) -> None:
    """Write scores as CSV: metadata comment, header, one row per sample.

    The pseudo_class column appears exactly when the method is crl.
    """
    meta = [f"method={scores.method}"]
    if scores.alpha is not None:
        meta.append(f"alpha={scores.alpha!r}")
    if scores.beta is not None:
        meta.append(f"beta={scores.beta!r}")
    with open(path, "w", newline="") as fh:
        fh.write("# " + " ".join(meta) + "\n")
        writer = csv.writer(fh)
        if scores.pseudo_classes is not None:
            writer.writerow(["index", "score", "pseudo_class"])
            for i, (s, pc) in enumerate(zip(scores.scores, scores.pseudo_classes)):
                writer.writerow([i, repr(float(s)), int(pc)])
        else:
            writer.writerow(["index", "score"])
            for i, s in enumerate(scores.scores):
                writer.writerow([i, repr(float(s))])


def read_scores_csv(path) -> ScoreSet:
    with open(path, "r", newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise CsvParseError(f"{path}: missing metadata comment line", row=1)
        meta: dict[str, str] = {}
        for token in first[1:].split():
            if "=" not in token:
                raise CsvParseError(f"{path}: bad metadata token {token!r}", row=1)
            key, value = token.split("=", 1)
            meta[key] = value
        if "method" not in meta:
            raise CsvParseError(f"{path}: metadata is missing method", row=1)
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "index" or "score" not in header:
            raise CsvParseError(f"{path}: bad or missing column header", row=2)
        has_pseudo = "pseudo_class" in header
        score_values: list[float] = []
        pseudo_values: list[int] = []
        for i, cells in enumerate(reader, start=3):
            if not cells:
                continue
            expected = 3 if has_pseudo else 2
            if len(cells) != expected:
                raise CsvParseError(
                    f"{path}: expected {expected} columns, got {len(cells)}", row=i
                )
            try:
                score_values.append(float(cells[1]))
                if has_pseudo:
                    pseudo_values.append(int(cells[2]))
            except ValueError as exc:
                raise CsvParseError(f"{path}: {exc}", row=i) from None
    if not score_values:
        raise CsvParseError(f"{path}: no score rows")
    alpha = float(meta["alpha"]) if "alpha" in meta else None
    beta = float(meta["beta"]) if "beta" in meta else None
    return ScoreSet(
        scores=np.array(score_values, dtype=np.float64),
        method=meta["method"],
        alpha=alpha,
        beta=beta,
        pseudo_classes=np.array(pseudo_values, dtype=np.int64) if has_pseudo else None,
    )


def logits_file_size(n_rows: int, n_cols: int) -> int:
    """Exact on-disk size in bytes of a logits file with the given shape."""
    return _HEADER.size + 2 * _U64.size + 4 * n_rows * n_cols


def default_paths(directory) -> dict[str, Path]:
    """Conventional fixture file names used by the synth pipeline."""
    base = Path(directory)
    return {
        "train_logits": base / "train_logits.oodl",
        "train_labels": base / "train_labels.oody",
        "test_id_logits": base / "test_id_logits.oodl",
        "test_id_labels": base / "test_id_labels.oody",
        "test_ood_logits": base / "test_ood_logits.oodl",
        "manifest": base / "manifest.json",
    }
