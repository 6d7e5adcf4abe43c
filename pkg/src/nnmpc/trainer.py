"""Minimal dense-MLP trainer emitting the runtime model format.

Plain minibatch SGD on mean-squared error, Xavier-uniform initialization,
everything funneled through one seed so identical configs and data give
bit-identical models. GRU layers are inference-only elsewhere in the
package and are rejected here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, TrainingError
from .nn import ACTIVATIONS, LayerSpec, ModelSpec, forward_batch

__all__ = ["TrainConfig", "TrainResult", "init_mlp", "grad_backprop", "train_mlp", "mse"]


@dataclass(frozen=True)
class TrainConfig:
    """Architecture and optimization hyperparameters.

    ``hidden`` lists (units, activation) pairs for the hidden stack;
    the output layer gets ``out_activation``. Loss is always MSE.
    ``optimizer`` picks plain SGD, Adam, or Levenberg-Marquardt ("lm").
    System-identification data from smooth excitation is often so
    ill-conditioned (near-collinear lag features) that first-order
    methods never reach the coefficient directions a downstream
    controller depends on; LM solves the damped normal equations per
    step and handles those valleys directly. For "lm", ``epochs`` counts
    LM iterations, ``lr`` is the initial damping factor, and batches are
    always full.
    """

    hidden: tuple[tuple[int, str], ...] = ((5, "relu"), (5, "relu"))
    out_activation: str = "tanh"
    epochs: int = 20
    batch_size: int = 256
    lr: float = 0.05
    seed: int = 0
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0:
            raise ArgumentError(f"hyperparameters must be positive, got {self}")
        for units, act in self.hidden:
            if units < 1 or act not in ACTIVATIONS:
                raise ArgumentError(f"bad hidden layer ({units}, {act!r})")
        if self.out_activation not in ACTIVATIONS:
            raise ArgumentError(f"bad output activation {self.out_activation!r}")
        if self.optimizer not in ("sgd", "adam", "lm"):
            raise ArgumentError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class TrainResult:
    model: ModelSpec
    loss_history: tuple[float, ...]
    fold_mses: tuple[tuple[float, float], ...] = ()


def init_mlp(input_dim: int, output_dim: int, cfg: TrainConfig) -> ModelSpec:
    """Seeded Xavier-uniform initialization of the configured architecture."""
    rng = np.random.default_rng(cfg.seed)
    sizes = [input_dim] + [u for u, _ in cfg.hidden] + [output_dim]
    acts = [a for _, a in cfg.hidden] + [cfg.out_activation]
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], acts):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(LayerSpec("dense", fan_out, act, w, np.zeros(fan_out)))
    return ModelSpec(input_dim=input_dim, layers=tuple(layers))


def _require_dense(model: ModelSpec) -> None:
    if any(layer.kind != "dense" for layer in model.layers):
        raise TrainingError("only dense layers are trainable")


def _forward_cached(model: ModelSpec, X: np.ndarray):
    activations = [X]
    pre = []
    a = X
    for layer in model.layers:
        z = a @ layer.weights + layer.bias
        pre.append(z)
        if layer.activation == "relu":
            a = np.maximum(z, 0.0)
        elif layer.activation == "tanh":
            a = np.tanh(z)
        elif layer.activation == "sigmoid":
            a = 1.0 / (1.0 + np.exp(-z))
        else:
            a = z
        activations.append(a)
    return activations, pre


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def grad_backprop(model: ModelSpec, X: np.ndarray, Y: np.ndarray):
    """Reverse-mode gradients of batch MSE w.r.t. every weight and bias.

    Returns (grads, loss) where grads is a list of (dW, db) per layer and
    loss = mean over the batch of the per-sample squared-error sum.
    """
    _require_dense(model)
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    batch = X.shape[0]
    activations, pre = _forward_cached(model, X)
    diff = activations[-1] - Y
    loss = float(np.mean(np.sum(diff * diff, axis=1)))
    grads = [None] * len(model.layers)
    delta = 2.0 * diff / batch
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        delta = delta * _act_grad(layer.activation, pre[i], activations[i + 1])
        grads[i] = (activations[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ layer.weights.T
    return grads, loss


def mse(model: ModelSpec, X: np.ndarray, Y: np.ndarray) -> float:
    """Mean squared error over all elements of the prediction matrix."""
    pred = forward_batch(model, np.asarray(X, dtype=np.float64))
    return float(np.mean((pred - np.asarray(Y, dtype=np.float64)) ** 2))


def _prediction_jacobian(model: ModelSpec, weights, biases, X: np.ndarray):
    """Per-sample gradients of every prediction element w.r.t. all parameters.

    Returns (residual-ordered predictions, jacobian of shape
    (rows * outputs, params)) with parameters ordered layer by layer,
    weights row-major then biases.
    """
    current = _assemble_raw(model, weights, biases)
    activations, pre = _forward_cached(current, X)
    rows = X.shape[0]
    n_out = activations[-1].shape[1]
    layer_count = len(current.layers)
    # sens[l][b, j, o] = d pred[b, o] / d z_l[b, j]
    sens = [None] * layer_count
    last = current.layers[-1]
    eye = np.eye(n_out)
    sens[-1] = _act_grad(last.activation, pre[-1], activations[-1])[:, :, None] * eye[None, :, :]
    for l in range(layer_count - 2, -1, -1):
        propagated = np.einsum("bjo,ij->bio", sens[l + 1], current.layers[l + 1].weights)
        sens[l] = propagated * _act_grad(
            current.layers[l].activation, pre[l], activations[l + 1]
        )[:, :, None]
    blocks = []
    for l in range(layer_count):
        wj = np.einsum("bi,bjo->boij", activations[l], sens[l]).reshape(
            rows * n_out, -1
        )
        bj = np.transpose(sens[l], (0, 2, 1)).reshape(rows * n_out, -1)
        blocks.extend([wj, bj])
    return activations[-1], np.hstack(blocks)


def _assemble_raw(template: ModelSpec, weights, biases) -> ModelSpec:
    layers = tuple(
        LayerSpec("dense", layer.units, layer.activation, w, b)
        for layer, w, b in zip(template.layers, weights, biases)
    )
    return ModelSpec(input_dim=template.input_dim, layers=layers)


def _apply_param_step(weights, biases, step):
    offset = 0
    new_w, new_b = [], []
    for w, b in zip(weights, biases):
        new_w.append(w + step[offset : offset + w.size].reshape(w.shape))
        offset += w.size
        new_b.append(b + step[offset : offset + b.size])
        offset += b.size
    return new_w, new_b


def _fit_lm(X: np.ndarray, Y: np.ndarray, cfg: TrainConfig) -> tuple[ModelSpec, list[float]]:
    model = init_mlp(X.shape[1], Y.shape[1], cfg)
    weights = [layer.weights.copy() for layer in model.layers]
    biases = [layer.bias.copy() for layer in model.layers]
    lam = cfg.lr
    history = []
    pred, jac = _prediction_jacobian(model, weights, biases, X)
    residual = (pred - Y).ravel()
    loss = float(np.mean(residual**2) * Y.shape[1])
    for _ in range(cfg.epochs):
        if not np.isfinite(loss):
            raise TrainingError(f"loss became non-finite ({loss})")
        gram = jac.T @ jac
        rhs = -jac.T @ residual
        step = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), rhs)
        trial_w, trial_b = _apply_param_step(weights, biases, step)
        trial_pred, trial_jac = _prediction_jacobian(model, trial_w, trial_b, X)
        trial_residual = (trial_pred - Y).ravel()
        trial_loss = float(np.mean(trial_residual**2) * Y.shape[1])
        if np.isfinite(trial_loss) and trial_loss <= loss:
            weights, biases = trial_w, trial_b
            pred, jac, residual, loss = trial_pred, trial_jac, trial_residual, trial_loss
            lam = max(lam * 0.3, 1e-14)
        else:
            lam = min(lam * 4.0, 1e12)
        history.append(loss)
    return _assemble(model, weights, biases), history


def _fit(X: np.ndarray, Y: np.ndarray, cfg: TrainConfig) -> tuple[ModelSpec, list[float]]:
    if cfg.optimizer == "lm":
        return _fit_lm(X, Y, cfg)
    model = init_mlp(X.shape[1], Y.shape[1], cfg)
    weights = [layer.weights.copy() for layer in model.layers]
    biases = [layer.bias.copy() for layer in model.layers]
    rng = np.random.default_rng(cfg.seed + 1)
    adam = _AdamState(weights, biases) if cfg.optimizer == "adam" else None
    history = []
    rows = X.shape[0]
    full_batch = cfg.batch_size >= rows
    for _ in range(cfg.epochs):
        # Order is irrelevant at full batch; skip the shuffle there.
        order = None if full_batch else rng.permutation(rows)
        epoch_loss = 0.0
        seen = 0
        for start in range(0, rows, cfg.batch_size):
            if full_batch:
                xb, yb = X, Y
            else:
                idx = order[start : start + cfg.batch_size]
                xb, yb = X[idx], Y[idx]
            current = _assemble(model, weights, biases)
            grads, loss = grad_backprop(current, xb, yb)
            if not np.isfinite(loss):
                raise TrainingError(f"loss became non-finite ({loss})")
            if adam is not None:
                adam.update(weights, biases, grads, cfg.lr)
            else:
                for i, (dw, db) in enumerate(grads):
                    weights[i] -= cfg.lr * dw
                    biases[i] -= cfg.lr * db
            epoch_loss += loss * xb.shape[0]
            seen += xb.shape[0]
        history.append(epoch_loss / max(seen, 1))
    return _assemble(model, weights, biases), history


class _AdamState:
    """First/second moment accumulators, beta1=0.9, beta2=0.999."""

    def __init__(self, weights, biases, eps=1e-8):
        self.mw = [np.zeros_like(w) for w in weights]
        self.vw = [np.zeros_like(w) for w in weights]
        self.mb = [np.zeros_like(b) for b in biases]
        self.vb = [np.zeros_like(b) for b in biases]
        self.t = 0
        self.eps = eps

    def update(self, weights, biases, grads, lr):
        self.t += 1
        b1, b2 = 0.9, 0.999
        corr1 = 1.0 - b1**self.t
        corr2 = 1.0 - b2**self.t
        for i, (dw, db) in enumerate(grads):
            self.mw[i] = b1 * self.mw[i] + (1 - b1) * dw
            self.vw[i] = b2 * self.vw[i] + (1 - b2) * dw * dw
            weights[i] -= lr * (self.mw[i] / corr1) / (np.sqrt(self.vw[i] / corr2) + self.eps)
            self.mb[i] = b1 * self.mb[i] + (1 - b1) * db
            self.vb[i] = b2 * self.vb[i] + (1 - b2) * db * db
            biases[i] -= lr * (self.mb[i] / corr1) / (np.sqrt(self.vb[i] / corr2) + self.eps)


def _assemble(template: ModelSpec, weights, biases) -> ModelSpec:
    layers = tuple(
        LayerSpec("dense", layer.units, layer.activation, w.copy(), b.copy())
        for layer, w, b in zip(template.layers, weights, biases)
    )
    return ModelSpec(input_dim=template.input_dim, layers=layers)


def train_mlp(X: np.ndarray, Y: np.ndarray, cfg: TrainConfig, splits=None) -> TrainResult:
    """Fit the configured MLP; deterministic for a given config and data.

    Without ``splits``, fits once on all rows. With a list of
    ((train_start, train_stop), (test_start, test_stop)) ranges, refits
    per split from the same seeded initialization and records
    (train_mse, test_mse) per fold; the returned model comes from the
    final split, which trains on the longest history.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ArgumentError(f"X and Y must be row-aligned matrices, got {X.shape}, {Y.shape}")
    if splits is None:
        model, history = _fit(X, Y, cfg)
        return TrainResult(model=model, loss_history=tuple(history))
    fold_mses = []
    model = None
    history: list[float] = []
    for (tr0, tr1), (te0, te1) in splits:
        model, history = _fit(X[tr0:tr1], Y[tr0:tr1], cfg)
        fold_mses.append((mse(model, X[tr0:tr1], Y[tr0:tr1]), mse(model, X[te0:te1], Y[te0:te1])))
    return TrainResult(model=model, loss_history=tuple(history), fold_mses=tuple(fold_mses))
