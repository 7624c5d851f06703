"""Domain types and scoring math for logits-based OOD detection.

The model under test is treated as a black box: all inputs here are raw
pre-softmax logits. Fitting builds a class relevance matrix whose row k
is the softmax of the mean training logits of class k. Scoring compares
a test sample's softmax against the prototype row of its predicted class
via KL divergence and combines that with the maximum raw logit.

Every scoring method emits scores where higher means more likely OOD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyClassError, InvalidInputError

VALID_METHODS = ("crl", "maxlogits", "msp")

# Tolerances baked into the type invariants.
_ROW_SUM_TOL = 1e-9
_RECOMPUTE_TOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LogitsMatrix:
    """N x C matrix of raw classifier outputs, one row per sample.

    Entries must be finite, N >= 1 and C >= 2. The backing array is an
    owned, read-only float64 copy, so instances are safe to share across
    threads.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise InvalidInputError(f"logits must be a 2-D matrix, got ndim={arr.ndim}")
        n, c = arr.shape
        if n < 1:
            raise InvalidInputError("logits matrix needs at least one row")
        if c < 2:
            raise InvalidInputError(f"logits matrix needs at least 2 classes, got {c}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("logits must be finite (no NaN/Inf)")
        object.__setattr__(self, "data", _readonly(arr))

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_classes(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LabelVector:
    """Ground-truth class indices aligned with a LogitsMatrix."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.labels, copy=True)
        if arr.ndim != 1:
            raise InvalidInputError(f"labels must be 1-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1:
            raise InvalidInputError("label vector must be nonempty")
        if not np.issubdtype(arr.dtype, np.integer):
            raise InvalidInputError(f"labels must be integers, got dtype={arr.dtype}")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise InvalidInputError("labels must be nonnegative class indices")
        object.__setattr__(self, "labels", _readonly(arr))

    @property
    def n_samples(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class ClassRelevanceMatrix:
    """Per-class prototype logits and probabilities, immutable after fit.

    Row k of ``prototypes_logits`` is the mean training logits of class k;
    row k of ``prototypes_prob`` is its softmax, so the probability matrix
    is row-stochastic. ``per_class_counts[k]`` records how many training
    samples produced row k.
    """

    prototypes_logits: np.ndarray
    prototypes_prob: np.ndarray
    per_class_counts: np.ndarray

    def __post_init__(self):
        logits = np.array(self.prototypes_logits, dtype=np.float64, copy=True)
        prob = np.array(self.prototypes_prob, dtype=np.float64, copy=True)
        counts = np.array(self.per_class_counts, copy=True)
        if logits.ndim != 2 or logits.shape[0] != logits.shape[1]:
            raise InvalidInputError(f"prototype logits must be square, got {logits.shape}")
        c = logits.shape[0]
        if c < 2:
            raise InvalidInputError("need at least 2 classes")
        if prob.shape != (c, c):
            raise InvalidInputError(f"prototype shapes disagree: {logits.shape} vs {prob.shape}")
        if counts.shape != (c,):
            raise InvalidInputError(f"per_class_counts must have length {c}")
        if not np.issubdtype(counts.dtype, np.integer):
            raise InvalidInputError("per_class_counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 1):
            raise InvalidInputError("every class must have at least one sample")
        if not (np.all(np.isfinite(logits)) and np.all(np.isfinite(prob))):
            raise InvalidInputError("prototype matrices must be finite")
        if np.any(prob <= 0.0) or np.any(prob > 1.0):
            raise InvalidInputError("prototype probabilities must lie in (0, 1]")
        row_sums = prob.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > _ROW_SUM_TOL):
            raise InvalidInputError("prototype probability rows must sum to 1")
        if np.any(np.abs(_softmax_rows(logits) - prob) > _RECOMPUTE_TOL):
            raise InvalidInputError("prototype probabilities do not match softmax of prototype logits")
        object.__setattr__(self, "prototypes_logits", _readonly(logits))
        object.__setattr__(self, "prototypes_prob", _readonly(prob))
        object.__setattr__(self, "per_class_counts", _readonly(counts))

    @property
    def n_classes(self) -> int:
        return self.prototypes_logits.shape[0]


@dataclass(frozen=True)
class ScoreSet:
    """Per-sample OOD scores plus the method and parameters that produced them.

    Convention across the whole toolkit: higher score = more likely OOD.
    ``pseudo_classes`` (the argmax-predicted class of each sample) is
    populated exactly when ``method == "crl"``.
    """

    scores: np.ndarray
    method: str
    alpha: float | None = None
    beta: float | None = None
    pseudo_classes: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in VALID_METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}; expected one of {VALID_METHODS}")
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        if scores.ndim != 1 or scores.shape[0] < 1:
            raise InvalidInputError("scores must be a nonempty 1-D vector")
        if not np.all(np.isfinite(scores)):
            raise InvalidInputError("scores must be finite")
        object.__setattr__(self, "scores", _readonly(scores))
        if self.method == "crl":
            if self.pseudo_classes is None:
                raise InvalidInputError("crl score sets must carry pseudo_classes")
            pc = np.array(self.pseudo_classes, copy=True)
            if pc.shape != scores.shape or not np.issubdtype(pc.dtype, np.integer):
                raise InvalidInputError("pseudo_classes must be integers aligned with scores")
            if np.any(pc < 0):
                raise InvalidInputError("pseudo_classes must be nonnegative")
            object.__setattr__(self, "pseudo_classes", _readonly(pc.astype(np.int64)))
        elif self.pseudo_classes is not None:
            raise InvalidInputError(f"pseudo_classes only apply to crl, not {self.method!r}")

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class CrlParams:
    """Weights and numeric floors for the combined relevance score.

    ``alpha`` scales the max-logit term, ``beta`` the reciprocal of the
    KL term. ``epsilon_prob`` floors probabilities inside the logs;
    ``epsilon_kl`` floors the KL value before it is inverted, so a test
    sample identical to its prototype gets a very negative (strongly ID)
    score instead of a division by zero.
    """

    alpha: float = 5.0
    beta: float = 5.0
    epsilon_prob: float = 1e-12
    epsilon_kl: float = 1e-12

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise InvalidInputError("alpha and beta must be finite")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidInputError("alpha and beta must be nonnegative")
        if self.alpha == 0 and self.beta == 0:
            raise InvalidInputError("alpha and beta must not both be zero")
        for name in ("epsilon_prob", "epsilon_kl"):
            value = getattr(self, name)
            if not (0.0 < value <= 1e-6):
                raise InvalidInputError(f"{name} must lie in (0, 1e-6], got {value}")


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    # max-subtraction keeps exp() in range for arbitrary finite logits
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_row(logits) -> np.ndarray:
    """Softmax of a single logits vector, stable under large magnitudes.

    The output sums to 1 within 1e-12 and is invariant (to the same
    tolerance) under adding a constant to every input entry.
    """
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"expected a 1-D vector, got ndim={arr.ndim}")
    if arr.shape[0] < 2:
        raise InvalidInputError("softmax needs at least 2 entries")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("softmax input must be finite")
    return _softmax_rows(arr[None, :])[0]


def fit_crm(train_logits: LogitsMatrix, train_labels: LabelVector) -> ClassRelevanceMatrix:
    """Build the class relevance matrix from training logits and labels.

    Rows are grouped by ground-truth label (misclassified samples are not
    filtered out); row k of the result is the arithmetic mean of the
    logits of class k, paired with its softmax. Every class in [0, C)
    must occur at least once, otherwise the prototype row for the missing
    class would be undefined.

    Raises:
        InvalidInputError: shape mismatch or labels out of range.
        EmptyClassError: some class index has no samples.
    """
    if train_labels.n_samples != train_logits.n_samples:
        raise InvalidInputError(
            f"labels ({train_labels.n_samples}) and logits ({train_logits.n_samples}) disagree on N"
        )
    c = train_logits.n_classes
    labels = train_labels.labels
    if np.any(labels >= c):
        bad = int(labels[labels >= c][0])
        raise InvalidInputError(f"label {bad} out of range for {c} classes")
    counts = np.bincount(labels, minlength=c)
    for k in range(c):
        if counts[k] == 0:
            raise EmptyClassError(k)
    # accumulate per-class sums in float64, divide once
    sums = np.zeros((c, c), dtype=np.float64)
    np.add.at(sums, labels, train_logits.data)
    proto_logits = sums / counts[:, None]
    proto_prob = _softmax_rows(proto_logits)
    return ClassRelevanceMatrix(
        prototypes_logits=proto_logits,
        prototypes_prob=proto_prob,
        per_class_counts=counts,
    )


def score_crl(
    crm: ClassRelevanceMatrix,
    test_logits: LogitsMatrix,
    params: CrlParams = CrlParams(),
) -> ScoreSet:
    """Combined relevance score for each test row.

    For a row z: P_t = softmax(z); the pseudo class is argmax(z) (lowest
    index on ties); the relevance term is KL(P_t || prototype row of the
    pseudo class) with probabilities floored at ``epsilon_prob`` inside
    the logs and the result floored at ``epsilon_kl``; the final score is

        -max(z) * alpha - (1 / KL) * beta

    so a sample whose softmax matches its prototype row scores strongly
    ID and samples far from every prototype score high (OOD).
    """
    if test_logits.n_classes != crm.n_classes:
        raise InvalidInputError(
            f"test logits have {test_logits.n_classes} classes, matrix expects {crm.n_classes}"
        )
    z = test_logits.data
    max_logit = z.max(axis=1)
    p_t = _softmax_rows(z)
    # argmax over raw logits: identical to argmax over softmax, but exact
    pseudo = np.argmax(z, axis=1)
    q = crm.prototypes_prob[pseudo]
    log_ratio = np.log(np.maximum(p_t, params.epsilon_prob)) - np.log(
        np.maximum(q, params.epsilon_prob)
    )
    relevance = np.maximum((p_t * log_ratio).sum(axis=1), params.epsilon_kl)
    scores = -max_logit * params.alpha - (1.0 / relevance) * params.beta
    return ScoreSet(
        scores=scores,
        method="crl",
        alpha=params.alpha,
        beta=params.beta,
        pseudo_classes=pseudo.astype(np.int64),
    )


def score_maxlogits(test_logits: LogitsMatrix) -> ScoreSet:
    """Negated maximum raw logit per row (higher = more OOD)."""
    return ScoreSet(scores=-test_logits.data.max(axis=1), method="maxlogits")


def score_msp(test_logits: LogitsMatrix) -> ScoreSet:
    """Negated maximum softmax probability per row (higher = more OOD)."""
    return ScoreSet(scores=-_softmax_rows(test_logits.data).max(axis=1), method="msp")
