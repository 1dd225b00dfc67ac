"""Small ReLU MLP classifier with exact reverse-mode gradients, in numpy.

Everything here is a pure function of explicit parameters, so forward and
gradient evaluation are safe to run concurrently; updates are plain
value-producing steps owned by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PROB_FLOOR",
    "MAX_LOSS",
    "Sample",
    "MLPParams",
    "init_params",
    "forward",
    "forward_batch",
    "predict_proba",
    "per_sample_loss",
    "per_sample_gradient",
    "batch_losses",
    "weighted_loss_gradient",
    "true_class_prob",
    "sgd_step",
]

# Softmax probabilities are clamped below at PROB_FLOOR before the log, so a
# per-sample loss never exceeds MAX_LOSS = -log(PROB_FLOOR) ~ 27.63.
PROB_FLOOR = 1e-12
MAX_LOSS = -math.log(PROB_FLOOR)


@dataclass(frozen=True)
class Sample:
    """One classification sample: feature vector, class label, group tag."""

    features: np.ndarray
    target: int
    group: str = ""


@dataclass
class MLPParams:
    """Per-layer weight matrices (out x in) and bias vectors.

    Hidden layers use ReLU; the last layer emits logits.  The same container
    doubles as the gradient structure.
    """

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    @property
    def dims(self) -> tuple:
        """Layer sizes (input, hidden..., output)."""
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def copy(self) -> "MLPParams":
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_params(dims, seed: int) -> MLPParams:
    """Uniform fan-based init: W ~ U[-s, s] with s = sqrt(6/(fan_in+fan_out)), b = 0."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"dims must list >= 2 positive layer sizes, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        s = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-s, s, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPParams(weights, biases)


def forward(params: MLPParams, features) -> np.ndarray:
    """Logits for a single feature vector."""
    x = np.asarray(features, dtype=float)
    if x.shape != (params.weights[0].shape[1],):
        raise ValueError(
            f"feature shape {x.shape} does not match model input ({params.weights[0].shape[1]},)"
        )
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        x = w @ x + b
        if i < len(params.weights) - 1:
            x = np.maximum(x, 0.0)
    return x


def forward_batch(params: MLPParams, X) -> np.ndarray:
    """Logits for a batch, shape (B, C)."""
    A = np.asarray(X, dtype=float)
    if A.ndim != 2 or A.shape[1] != params.weights[0].shape[1]:
        raise ValueError(f"batch shape {A.shape} does not match model input")
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        A = A @ w.T + b
        if i < len(params.weights) - 1:
            A = np.maximum(A, 0.0)
    return A


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def predict_proba(params: MLPParams, X) -> np.ndarray:
    """Softmax class probabilities for a batch, rows summing to 1."""
    return np.exp(_log_softmax(forward_batch(params, X)))


def per_sample_loss(params: MLPParams, sample: Sample) -> float:
    """Softmax cross-entropy of the sample, clamped into [0, MAX_LOSS]."""
    logits = forward(params, sample.features)
    if not 0 <= sample.target < logits.size:
        raise ValueError(f"target {sample.target} out of range for {logits.size} classes")
    return min(-_log_softmax(logits)[sample.target], MAX_LOSS)


def batch_losses(params: MLPParams, X, y) -> np.ndarray:
    """Clamped cross-entropy per sample, shape (B,)."""
    logp = _log_softmax(forward_batch(params, X))
    y = np.asarray(y, dtype=np.int64)
    return np.minimum(-logp[np.arange(y.size), y], MAX_LOSS)


def true_class_prob(params: MLPParams, X, y) -> np.ndarray:
    """Probability assigned to each sample's true class, shape (B,)."""
    probs = predict_proba(params, X)
    y = np.asarray(y, dtype=np.int64)
    return probs[np.arange(y.size), y]


def per_sample_gradient(params: MLPParams, sample: Sample) -> MLPParams:
    """Exact gradient of :func:`per_sample_loss` w.r.t. every parameter."""
    x = np.asarray(sample.features, dtype=float)
    _, grad = weighted_loss_gradient(params, x[np.newaxis, :], [sample.target], np.ones(1))
    return grad


def weighted_loss_gradient(params: MLPParams, X, y, sample_weights) -> tuple:
    """One fused pass: raw per-sample losses and the weighted-mean gradient.

    The gradient is ``(1/B) * sum_j w_j * dL_j/dtheta``; the returned losses
    are unweighted.  Samples whose true-class probability sits at the clamp
    floor contribute zero gradient (their loss is saturated).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(sample_weights, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size or w.size != y.size:
        raise ValueError("X, y, and sample_weights must agree on the batch size")

    # Forward, caching pre-activations for the backward pass.
    acts = [X]
    zs = []
    A = X
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        Z = A @ W.T + b
        zs.append(Z)
        A = np.maximum(Z, 0.0) if i < len(params.weights) - 1 else Z
        acts.append(A)

    logp = _log_softmax(zs[-1])
    rows = np.arange(y.size)
    raw = -logp[rows, y]
    losses = np.minimum(raw, MAX_LOSS)

    delta = np.exp(logp)
    delta[rows, y] -= 1.0
    delta[raw > MAX_LOSS] = 0.0
    delta *= (w / y.size)[:, np.newaxis]

    g_weights = [None] * len(params.weights)
    g_biases = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        g_weights[i] = delta.T @ acts[i]
        g_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (zs[i - 1] > 0)
    return losses, MLPParams(g_weights, g_biases)


def sgd_step(params: MLPParams, gradient: MLPParams, learning_rate: float) -> MLPParams:
    """Return ``params - learning_rate * gradient`` elementwise."""
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
    if len(params.weights) != len(gradient.weights) or any(
        pw.shape != gw.shape or pb.shape != gb.shape
        for pw, gw, pb, gb in zip(params.weights, gradient.weights, params.biases, gradient.biases)
    ):
        raise ValueError("gradient structure does not match params")
    return MLPParams(
        [w - learning_rate * g for w, g in zip(params.weights, gradient.weights)],
        [b - learning_rate * g for b, g in zip(params.biases, gradient.biases)],
    )
