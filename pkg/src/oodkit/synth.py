"""Deterministic synthetic data and a toy softmax classifier.

Lets the full fit -> score -> evaluate pipeline run and be verified
without any external model. Sampling uses numpy's Philox 4x64
counter-based generator, seeded as SeedSequence([seed, stream]), so a
given (seed, stream) pair reproduces identical bytes on every run:

  stream 0 - training features        stream 2 - held-out ID features
  stream 1 - OOD features             stream 3 - class means helper

Training is single-threaded full-batch gradient descent; determinism is
the contract, speed is not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabelVector, LogitsMatrix, _readonly
from .errors import InvalidInputError, TrainingDivergedError

STREAM_TRAIN = 0
STREAM_OOD = 1
STREAM_TEST_ID = 2
STREAM_MEANS = 3

_MAX_SEED = 2**64


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Isotropic Gaussian blobs: one per class, shared stddev, fixed seed.

    ``stddev`` may be 0, in which case every sample of class k collapses
    onto ``means[k]`` (the degenerate limit).
    """

    n_classes: int
    dim: int
    means: np.ndarray
    stddev: float
    n_per_class: int
    seed: int

    def __post_init__(self):
        if self.n_classes < 2:
            raise InvalidInputError("need at least 2 classes")
        if self.dim < 1:
            raise InvalidInputError("dim must be positive")
        means = np.array(self.means, dtype=np.float64, copy=True)
        if means.shape != (self.n_classes, self.dim):
            raise InvalidInputError(
                f"means must have shape ({self.n_classes}, {self.dim}), got {means.shape}"
            )
        if not np.all(np.isfinite(means)):
            raise InvalidInputError("means must be finite")
        for i in range(self.n_classes):
            for j in range(i + 1, self.n_classes):
                if np.array_equal(means[i], means[j]):
                    raise InvalidInputError(f"means of classes {i} and {j} coincide")
        if not np.isfinite(self.stddev) or self.stddev < 0:
            raise InvalidInputError("stddev must be finite and nonnegative")
        if self.n_per_class < 1:
            raise InvalidInputError("n_per_class must be at least 1")
        if not (0 <= self.seed < _MAX_SEED):
            raise InvalidInputError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "means", _readonly(means))


@dataclass(frozen=True)
class LinearSoftmaxModel:
    """Linear classifier: logits(x) = weights @ x + bias."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        b = np.array(self.bias, dtype=np.float64, copy=True)
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise InvalidInputError(f"inconsistent parameter shapes {w.shape}, {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise InvalidInputError("model parameters must be finite")
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "bias", _readonly(b))


def sample_means(n_classes: int, dim: int, spread: float, seed: int) -> np.ndarray:
    """Draw class means ~ Normal(0, spread^2 I) from the means stream."""
    if spread <= 0:
        raise InvalidInputError("spread must be positive")
    return _rng(seed, STREAM_MEANS).normal(0.0, spread, size=(n_classes, dim))


def generate(spec: GaussianMixtureSpec, stream: int = STREAM_TRAIN):
    """Sample the mixture: class k contributes n_per_class rows in order.

    Returns (features, labels) with features of shape
    (n_classes * n_per_class, dim). Identical (spec, stream) pairs yield
    identical arrays.
    """
    rng = _rng(spec.seed, stream)
    blocks = []
    for k in range(spec.n_classes):
        blocks.append(
            rng.normal(loc=spec.means[k], scale=spec.stddev, size=(spec.n_per_class, spec.dim))
        )
    features = np.concatenate(blocks, axis=0)
    labels = np.repeat(np.arange(spec.n_classes, dtype=np.int64), spec.n_per_class)
    return features, LabelVector(labels)


def cross_entropy_loss(weights, bias, features, labels: LabelVector) -> float:
    """Mean cross-entropy of the linear model, via log-sum-exp."""
    z = features @ np.asarray(weights).T + np.asarray(bias)
    m = z.max(axis=1)
    lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
    return float(np.mean(lse - z[np.arange(z.shape[0]), labels.labels]))


def cross_entropy_gradients(weights, bias, features, labels: LabelVector):
    """Analytical gradients of the mean cross-entropy w.r.t. weights and bias."""
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    z = features @ w.T + b
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    n = features.shape[0]
    p[np.arange(n), labels.labels] -= 1.0
    p /= n
    return p.T @ features, p.sum(axis=0)


def train(features, labels: LabelVector, epochs: int, lr: float) -> LinearSoftmaxModel:
    """Full-batch gradient descent from zero-initialized parameters.

    The objective is convex, so zero init is adequate and the whole run
    is deterministic. Zero epochs returns the zero model (uniform
    predictions everywhere).

    Raises:
        TrainingDivergedError: the loss became non-finite (lr too large).
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != labels.n_samples:
        raise InvalidInputError("features and labels are misaligned")
    if lr <= 0:
        raise InvalidInputError("lr must be positive")
    if epochs < 0:
        raise InvalidInputError("epochs must be nonnegative")
    n_classes = max(int(labels.labels.max()) + 1, 2)
    w = np.zeros((n_classes, x.shape[1]))
    b = np.zeros(n_classes)
    for _ in range(epochs):
        loss = cross_entropy_loss(w, b, x, labels)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss became non-finite: {loss}")
        grad_w, grad_b = cross_entropy_gradients(w, b, x, labels)
        w -= lr * grad_w
        b -= lr * grad_b
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise TrainingDivergedError("parameters became non-finite")
    return LinearSoftmaxModel(weights=w, bias=b)


def logits(model: LinearSoftmaxModel, features) -> LogitsMatrix:
    """Raw model outputs, one row per feature row."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[1]:
        raise InvalidInputError(
            f"features have dim {x.shape[-1]}, model expects {model.weights.shape[1]}"
        )
    return LogitsMatrix(x @ model.weights.T + model.bias)


def accuracy(model: LinearSoftmaxModel, features, labels: LabelVector) -> float:
    predictions = np.argmax(logits(model, features).data, axis=1)
    return float(np.mean(predictions == labels.labels))


def _ood_center(means: np.ndarray, offset: float) -> np.ndarray:
    """Deterministic point at distance >= offset from every class mean.

    Prefers a direction orthogonal to the span of the centered means
    (then the center sits offset away from the centroid and
    sqrt(d_k^2 + offset^2) >= offset from mean k, in a region where the
    class structure gives no guidance). When the means span the whole
    space, falls back to pushing past the farthest mean.
    """
    centroid = means.mean(axis=0)
    centered = means - centroid
    singular = np.linalg.svd(centered, compute_uv=False)
    tol = max(centered.shape) * np.finfo(np.float64).eps * singular[0]
    rank = int(np.count_nonzero(singular > tol))
    dim = means.shape[1]
    if rank < dim:
        _, _, vt = np.linalg.svd(centered, full_matrices=True)
        direction = vt[rank].copy()
        # LAPACK sign is arbitrary; pin it for reproducibility
        lead = direction[np.argmax(np.abs(direction))]
        if lead < 0:
            direction = -direction
        return centroid + offset * direction
    distances = np.linalg.norm(centered, axis=1)
    k = int(np.argmax(distances))
    direction = centered[k] / distances[k]
    return centroid + (distances.max() + offset) * direction


def make_ood(spec: GaussianMixtureSpec, offset: float, n: int) -> np.ndarray:
    """Sample n OOD rows around a point at distance >= offset from every mean."""
    if not np.isfinite(offset) or offset <= 0:
        raise InvalidInputError("offset must be positive")
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    center = _ood_center(spec.means, offset)
    rng = _rng(spec.seed, STREAM_OOD)
    return rng.normal(loc=center, scale=spec.stddev, size=(n, spec.dim))
