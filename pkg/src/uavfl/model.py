"""Tiny from-scratch MLP classifier trained locally on each UAV.

Parameters live in one flat float64 vector so that models can be exchanged,
averaged and sized as a single payload. Layout per layer: the weight matrix
(fan_in x fan_out, row-major) followed by the bias vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from uavfl.errors import ConfigError

LOSS_FLOOR = 1e-12


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int = 16
    hidden_dims: tuple[int, ...] = (79,)
    num_classes: int = 5

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = self.layer_dims
        if any(d < 1 for d in dims):
            raise ConfigError("model", f"all layer sizes must be >= 1, got {dims}")

    @property
    def layer_dims(self) -> list[int]:
        return [self.input_dim, *self.hidden_dims, self.num_classes]

    @property
    def layers(self) -> list[tuple[int, int]]:
        dims = self.layer_dims
        return list(zip(dims[:-1], dims[1:]))

    @property
    def num_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layers)

    def unpack(self, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Split a flat vector into per-layer (W, b) views (no copies)."""
        params = np.asarray(params)
        if params.shape != (self.num_params,):
            raise ConfigError(
                "model", f"expected {self.num_params} parameters, got shape {params.shape}"
            )
        out = []
        pos = 0
        for fi, fo in self.layers:
            w = params[pos : pos + fi * fo].reshape(fi, fo)
            pos += fi * fo
            b = params[pos : pos + fo]
            pos += fo
            out.append((w, b))
        return out


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.025
    local_epochs: int = 3
    batch_size: int = 5

    def __post_init__(self):
        # zero is tolerated here for no-op checks; config files require > 0
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ConfigError("training.learning_rate", "must be a finite value > 0")
        if self.local_epochs < 0:
            raise ConfigError("training.local_epochs", "must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("training.batch_size", "must be >= 1")


@dataclass(frozen=True)
class Sample:
    features: np.ndarray = field(repr=False)
    label: int = 0


def init_params(arch: MlpArchitecture, rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform weights, zero biases."""
    chunks = []
    for fi, fo in arch.layers:
        limit = np.sqrt(6.0 / (fi + fo))
        chunks.append(rng.uniform(-limit, limit, size=fi * fo))
        chunks.append(np.zeros(fo))
    return np.concatenate(chunks)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_all(arch, params, X):
    """Return the list of layer activations, input first, probabilities last."""
    acts = [X]
    h = X
    layers = arch.unpack(params)
    for k, (w, b) in enumerate(layers):
        z = h @ w + b
        if k < len(layers) - 1:
            h = np.maximum(z, 0.0)
        else:
            h = _softmax(z)
        acts.append(h)
    return acts


def predict_proba(arch: MlpArchitecture, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != arch.input_dim:
        raise ConfigError("model", f"expected {arch.input_dim} features, got {X.shape[1]}")
    return _forward_all(arch, params, X)[-1]


def forward(arch: MlpArchitecture, params: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (arch.input_dim,):
        raise ConfigError(
            "model", f"expected {arch.input_dim} features, got shape {features.shape}"
        )
    return predict_proba(arch, params, features[None, :])[0]


def cross_entropy(probabilities, label: int) -> float:
    """-ln of the true-class probability, floored at LOSS_FLOOR."""
    return float(-np.log(max(probabilities[label], LOSS_FLOOR)))


def batch_loss(arch: MlpArchitecture, params: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy of the model over (X, y)."""
    probs = predict_proba(arch, params, X)
    return float(np.mean(-np.log(np.maximum(probs[np.arange(len(y)), y], LOSS_FLOOR))))


def _loss_and_grad(arch, params, X, y):
    acts = _forward_all(arch, params, X)
    probs = acts[-1]
    n = len(y)
    rows = np.arange(n)
    p_true = probs[rows, y]
    loss = float(np.mean(-np.log(np.maximum(p_true, LOSS_FLOOR))))

    # softmax + cross-entropy: dL/dz = p - onehot; flat (zero) where the floor binds
    delta = probs.copy()
    delta[rows, y] -= 1.0
    delta[p_true < LOSS_FLOOR] = 0.0
    delta /= n

    layers = arch.unpack(params)
    grads = []
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        h_in = acts[k]
        grads.append((delta.sum(axis=0), h_in.T @ delta))
        if k > 0:
            delta = (delta @ w.T) * (h_in > 0)
    flat = []
    for gb, gw in reversed(grads):
        flat.append(gw.ravel())
        flat.append(gb)
    return loss, np.concatenate(flat)


def gradient(arch: MlpArchitecture, params: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mean cross-entropy gradient over a nonempty batch."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("gradient of an empty batch")
    return _loss_and_grad(arch, params, X, y)[1]


def local_train(
    arch: MlpArchitecture,
    params: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainingConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Mini-batch SGD over the local shard.

    Each epoch draws a fresh permutation from ``rng``. Returns the updated
    parameters and the mean per-sample loss over the last epoch's batches,
    each batch scored just before its step. With zero epochs the input is
    returned as-is together with the plain evaluation loss on the shard.
    """
    params = np.array(params, dtype=np.float64, copy=True)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if cfg.local_epochs == 0:
        loss = batch_loss(arch, params, X, y) if len(y) else float("nan")
        return params, loss
    if len(y) == 0:
        raise ValueError("cannot train on an empty shard")

    n = len(y)
    epoch_loss = 0.0
    for _ in range(cfg.local_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, g = _loss_and_grad(arch, params, X[idx], y[idx])
            params -= cfg.learning_rate * g
            epoch_loss += loss * len(idx)
    return params, epoch_loss / n
