"""Post-hoc OOD detection on classifier logits.

Fit a class relevance matrix on training logits, score test samples
(prototype-KL combined score, max-logit and max-softmax baselines),
and evaluate detectors with FPR95/AUROC. All scores follow one
convention: higher = more likely out-of-distribution.
"""

from . import io, metrics, synth
from .core import (
    ClassRelevanceMatrix,
    CrlParams,
    LabelVector,
    LogitsMatrix,
    ScoreSet,
    fit_crm,
    score_crl,
    score_maxlogits,
    score_msp,
    softmax_row,
)
from .errors import (
    EmptyClassError,
    FormatError,
    InvalidInputError,
    OodkitError,
    TrainingDivergedError,
)
from .metrics import EvalReport, auroc, evaluate, fpr_at_tpr

__version__ = "0.1.0"

__all__ = [
    "ClassRelevanceMatrix",
    "CrlParams",
    "EmptyClassError",
    "EvalReport",
    "FormatError",
    "InvalidInputError",
    "LabelVector",
    "LogitsMatrix",
    "OodkitError",
    "ScoreSet",
    "TrainingDivergedError",
    "auroc",
    "evaluate",
    "fit_crm",
    "fpr_at_tpr",
    "io",
    "metrics",
    "score_crl",
    "score_maxlogits",
    "score_msp",
    "softmax_row",
    "synth",
]
