"""Two-layer classifier head, loss, initializers, and the Adam update.

The head is dense -> ReLU -> dense -> softmax over the flattened feature
map. Categorical cross-entropy floors probabilities at 1e-12 before the
log; Adam follows the bias-corrected update with epsilon added outside the
square root.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-12


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def head_forward(features: np.ndarray, layers) -> np.ndarray:
    """Class probabilities for one flattened feature vector."""
    return head_forward_batch(np.atleast_2d(features), layers)[0][0]


def head_forward_batch(features: np.ndarray, layers):
    """Forward pass over a batch; returns (probs, cache) for the backward pass.

    Rows are computed one at a time with fixed-shape mat-vec products so a
    row's result never depends on the batch it sits in (BLAS picks different
    kernels for different batch shapes, which would break the exact
    duplicated-sample identity of the mean reduction).
    """
    l1, l2 = layers
    batch = features.shape[0]
    z1 = np.empty((batch, l1.weights.shape[0]))
    logits = np.empty((batch, l2.weights.shape[0]))
    for b in range(batch):
        z1[b] = l1.weights @ features[b] + l1.biases
        logits[b] = l2.weights @ relu(z1[b]) + l2.biases
    a1 = relu(z1)
    probs = softmax(logits)
    return probs, (features, z1, a1)


def head_backward_batch(probs: np.ndarray, one_hot: np.ndarray, cache, layers):
    """Mean-cross-entropy gradients for both layers and the input features."""
    l1, l2 = layers
    features, z1, a1 = cache
    batch = probs.shape[0]
    dw1 = np.zeros_like(l1.weights)
    db1 = np.zeros_like(l1.biases)
    dw2 = np.zeros_like(l2.weights)
    db2 = np.zeros_like(l2.biases)
    dfeatures = np.empty_like(features)
    for b in range(batch):
        dlogit = (probs[b] - one_hot[b]) / batch
        dw2 += np.outer(dlogit, a1[b])
        db2 += dlogit
        dz1 = (l2.weights.T @ dlogit) * (z1[b] > 0.0)
        dw1 += np.outer(dz1, features[b])
        db1 += dz1
        dfeatures[b] = l1.weights.T @ dz1
    return {"head.w1": dw1, "head.b1": db1, "head.w2": dw2, "head.b2": db2}, dfeatures


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    eye = np.zeros((len(labels), num_classes))
    eye[np.arange(len(labels)), labels] = 1.0
    return eye


def cross_entropy(probs: np.ndarray, one_hot_label: np.ndarray) -> float:
    """-log of the true-class probability, floored at 1e-12 before the log."""
    p_true = float(np.dot(probs, one_hot_label))
    return -float(np.log(max(p_true, PROB_FLOOR)))


def cross_entropy_batch(probs: np.ndarray, labels: np.ndarray) -> float:
    p_true = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(p_true, PROB_FLOOR))))


# -- initialization ------------------------------------------------------------

def xavier_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def init_head(dims, seed) -> list[DenseLayer]:
    """Xavier-uniform weights, zero biases, for dims = (in, hidden, out)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        layers.append(DenseLayer(xavier_uniform(rng, fan_out, fan_in), np.zeros(fan_out)))
    return layers


def init_wev(channels: int, scheme: str, rng: np.random.Generator):
    """Per-channel weights/biases: N(1, 0.1^2)/N(0, 0.1^2) on RGB-style data,
    Xavier-uniform (fan_in = fan_out = C) on the 12-channel data."""
    if scheme == "normal":
        w = rng.normal(1.0, 0.1, size=channels)
        b = rng.normal(0.0, 0.1, size=channels)
    elif scheme == "xavier":
        bound = np.sqrt(6.0 / (2.0 * channels))
        w = rng.uniform(-bound, bound, size=channels)
        b = rng.uniform(-bound, bound, size=channels)
    else:
        raise ValueError(f"unknown WEV init scheme {scheme!r}")
    return w, b


# -- adam ----------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Bias-corrected Adam update, in place on every named parameter array."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, value in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        value -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
