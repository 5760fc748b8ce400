"""Dense ReLU network with inverted dropout, MSE loss, backprop and plain SGD.

Weights are stored as ``(fan_out, fan_in)`` matrices so a layer computes
``x @ W.T + b``.  Passing an ``rng`` to :func:`forward` selects training mode
(dropout active); omitting it is evaluation mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

GRAD_CLIP = 1.0


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int
    output_size: int
    hidden: tuple[int, ...] = (512, 512, 512, 512, 256)
    dropout_rate: float = 0.5
    dropout_after: tuple[int, ...] = (1, 3)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "dropout_after", tuple(sorted(set(int(i) for i in self.dropout_after))))
        widths = (self.input_size, *self.hidden, self.output_size)
        if any(w < 1 for w in widths):
            raise ConfigError(f"all layer widths must be >= 1, got {widths}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        bad = [i for i in self.dropout_after if not 0 <= i < len(self.hidden)]
        if bad:
            raise ConfigError(f"dropout_after indices {bad} are not hidden layers")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_size, *self.hidden, self.output_size)


@dataclass
class NetworkParams:
    config: NetworkConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )

    def equals(self, other: "NetworkParams") -> bool:
        """Bit-identical comparison of configs, weights and biases."""
        return (
            self.config == other.config
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )


def init_network(config: NetworkConfig, seed: int) -> NetworkParams:
    rng = np.random.default_rng(seed)
    sizes = config.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(config, weights, biases)


def copy_weights(src: NetworkParams) -> NetworkParams:
    return NetworkParams(
        src.config,
        [w.copy() for w in src.weights],
        [b.copy() for b in src.biases],
    )


def _as_batch(params: NetworkParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != params.config.input_size:
        raise ShapeError(
            f"input has shape {x.shape}, network expects {params.config.input_size} features"
        )
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite network input")
    return X, single


def dropout_masks(config: NetworkConfig, batch: int, rng: np.random.Generator) -> dict[int, np.ndarray]:
    """Inverted-dropout masks: kept units scaled by 1/(1-p), dropped units 0."""
    p = config.dropout_rate
    masks = {}
    for idx in config.dropout_after:
        keep = rng.random((batch, config.hidden[idx])) >= p
        masks[idx] = keep / (1.0 - p)
    return masks


def _forward_cached(params: NetworkParams, X: np.ndarray, masks: dict[int, np.ndarray]):
    acts = [X]
    gates = []
    a = X
    last = params.n_layers - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ W.T + b
        if l == last:
            return z, acts, gates
        g = (z > 0).astype(float)
        if l in masks:
            g = g * masks[l]
        a = z * g
        gates.append(g)
        acts.append(a)
    raise AssertionError("network has no layers")


def forward(params: NetworkParams, x, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Q-values for one feature vector (1-D) or a batch (2-D, one row per input)."""
    X, single = _as_batch(params, x)
    masks = dropout_masks(params.config, X.shape[0], rng) if rng is not None else {}
    q, _, _ = _forward_cached(params, X, masks)
    return q[0] if single else q


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=float).reshape(-1)
    target = np.asarray(target, dtype=float).reshape(-1)
    if pred.size != target.size or pred.size < 1:
        raise ShapeError(f"mse_loss needs equal non-empty lengths, got {pred.size} and {target.size}")
    return float(np.mean((pred - target) ** 2))


def loss_and_grad(params: NetworkParams, X, targets, actions, masks=None):
    """Loss on the taken actions' Q-values and its exact (unclipped) gradient.

    Returns ``(loss, grad_weights, grad_biases)``.
    """
    X, _ = _as_batch(params, X)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    actions = np.asarray(actions, dtype=np.int64).reshape(-1)
    B = X.shape[0]
    if targets.size != B or actions.size != B:
        raise ShapeError("inputs, targets and actions must have the same batch length")
    q, acts, gates = _forward_cached(params, X, masks or {})
    rows = np.arange(B)
    err = q[rows, actions] - targets
    loss = float(np.mean(err**2))

    dz = np.zeros_like(q)
    dz[rows, actions] = 2.0 * err / B
    gW = [None] * params.n_layers
    gb = [None] * params.n_layers
    for l in range(params.n_layers - 1, -1, -1):
        gW[l] = dz.T @ acts[l]
        gb[l] = dz.sum(axis=0)
        if l > 0:
            dz = (dz @ params.weights[l]) * gates[l - 1]
    return loss, gW, gb


def _unpack_batch(batch):
    if isinstance(batch, tuple) and len(batch) == 3 and isinstance(batch[0], np.ndarray) and batch[0].ndim == 2:
        return batch
    if len(batch) == 0:
        raise ValueError("empty training batch")
    X = np.stack([np.asarray(s[0], dtype=float) for s in batch])
    y = np.array([s[1] for s in batch], dtype=float)
    a = np.array([s[2] for s in batch], dtype=np.int64)
    return X, y, a


def backward_sgd_step(
    params: NetworkParams,
    batch,
    lr: float,
    rng: Optional[np.random.Generator] = None,
) -> tuple[NetworkParams, float]:
    """One plain SGD step on the taken-action squared error.

    ``batch`` is a sequence of ``(features, target_q, action_index)`` or an
    ``(X, targets, actions)`` array triple.  Dropout masks are drawn from
    ``rng`` (training mode) and shared by the forward and backward pass; each
    gradient entry is clipped to [-1, 1].  Returns the new parameters and the
    loss before the update.
    """
    X, y, a = _unpack_batch(batch)
    if X.shape[0] == 0:
        raise ValueError("empty training batch")
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    masks = dropout_masks(params.config, X.shape[0], rng) if rng is not None else {}
    loss, gW, gb = loss_and_grad(params, X, y, a, masks)
    weights = [W - lr * np.clip(g, -GRAD_CLIP, GRAD_CLIP) for W, g in zip(params.weights, gW)]
    biases = [b - lr * np.clip(g, -GRAD_CLIP, GRAD_CLIP) for b, g in zip(params.biases, gb)]
    out = NetworkParams(params.config, weights, biases)
    if not out.all_finite():
        raise NumericError("SGD step produced non-finite parameters")
    return out, loss
