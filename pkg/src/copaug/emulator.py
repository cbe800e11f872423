"""Feed-forward network emulator trained with Adam on Huber loss.

Plain-numpy multilayer perceptron: ELU hidden layers, linear output,
z-score input normalization, mini-batch Adam, early stopping on the
validation loss with best-weights restoration.  Everything is seeded and
deterministic: weight init and batch shuffling draw from the package's
Philox streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dataset import DataMatrix, ProfileSet, flatten

MLP_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MLPLayout:
    n_inputs: int
    hidden: tuple = (512, 512, 512)
    n_outputs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        widths = (self.n_inputs, *self.hidden, self.n_outputs)
        if any(w < 1 for w in widths):
            raise ValueError(f"all layer widths must be >= 1, got {widths}")

    @property
    def widths(self) -> tuple:
        return (self.n_inputs, *self.hidden, self.n_outputs)


@dataclass(frozen=True)
class Normalizer:
    """Per-feature z-score transform fitted on training inputs."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_data(cls, x: np.ndarray) -> "Normalizer":
        x = np.asarray(x, dtype=float)
        std = np.maximum(x.std(axis=0), 1e-8)  # floor for constant features
        return cls(x.mean(axis=0), std)

    @classmethod
    def identity(cls, width: int) -> "Normalizer":
        return cls(np.zeros(width), np.ones(width))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    patience: int = 25
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    huber_delta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.patience, self.batch_size) < 1:
            raise ValueError("epochs, patience and batch_size must be positive")
        if self.patience > self.epochs:
            raise ValueError("patience must not exceed the epoch limit")
        if min(self.learning_rate, self.huber_delta, self.adam_eps) <= 0:
            raise ValueError("learning_rate, huber_delta and adam_eps must be positive")


@dataclass
class MLPModel:
    layout: MLPLayout
    weights: list
    biases: list
    normalizer: Normalizer
    history: dict = field(default_factory=lambda: {"train": [], "val": []})
    best_epoch: int = -1

    def copy(self) -> "MLPModel":
        return MLPModel(
            self.layout,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.normalizer,
            {k: list(v) for k, v in self.history.items()},
            self.best_epoch,
        )


def init_mlp(layout: MLPLayout, seed: int) -> MLPModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    gen = rng.stream(seed)
    weights, biases = [], []
    widths = layout.widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        w = (2.0 * gen.random((fan_in, fan_out)) - 1.0) * scale
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MLPModel(layout, weights, biases, Normalizer.identity(layout.n_inputs))


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0.0, z, np.expm1(np.minimum(z, 0.0)))


def _forward_cached(m: MLPModel, x_norm: np.ndarray):
    """Forward pass keeping pre-activations for backprop."""
    pre, act = [], [x_norm]
    a = x_norm
    last = len(m.weights) - 1
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        z = a @ w + b
        pre.append(z)
        a = z if k == last else elu(z)
        act.append(a)
    return pre, act


def forward(m: MLPModel, x) -> np.ndarray:
    """Normalized forward pass; accepts a single row or a batch."""
    x = np.asarray(getattr(x, "values", x), dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != m.layout.n_inputs:
        raise ValueError(f"expected {m.layout.n_inputs} input features, got {x.shape[1]}")
    _, act = _forward_cached(m, m.normalizer.apply(x))
    return act[-1][0] if single else act[-1]


def huber_loss(pred, target, delta: float = 1.0) -> float:
    """Mean over all elements of the Huber penalty."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    r = np.abs(pred - target)
    per = np.where(r <= delta, 0.5 * r * r, delta * (r - 0.5 * delta))
    return float(per.mean())


def loss_and_grads(m: MLPModel, x: np.ndarray, y: np.ndarray, delta: float):
    """Huber loss and its analytic gradients w.r.t. every weight and bias."""
    x_norm = m.normalizer.apply(x)
    pre, act = _forward_cached(m, x_norm)
    r = act[-1] - y
    count = r.size
    ar = np.abs(r)
    loss = float(np.where(ar <= delta, 0.5 * r * r, delta * (ar - 0.5 * delta)).mean())
    # dLoss/dpred: r inside the quadratic zone, delta*sign(r) outside.
    grad_out = np.clip(r, -delta, delta) / count
    grads_w = [None] * len(m.weights)
    grads_b = [None] * len(m.biases)
    last = len(m.weights) - 1
    delta_k = grad_out
    for k in range(last, -1, -1):
        grads_w[k] = act[k].T @ delta_k
        grads_b[k] = delta_k.sum(axis=0)
        if k > 0:
            upstream = delta_k @ m.weights[k].T
            z = pre[k - 1]
            delta_k = upstream * np.where(z >= 0.0, 1.0, np.exp(z))
    return loss, grads_w, grads_b


class AdamState:
    """First/second moment accumulators for one parameter list."""

    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads, cfg: TrainConfig):
        self.t += 1
        b1, b2 = cfg.beta1, cfg.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for p, g, mm, vv in zip(params, grads, self.m, self.v):
            mm *= b1
            mm += (1.0 - b1) * g
            vv *= b2
            vv += (1.0 - b2) * g * g
            p -= cfg.learning_rate * (mm / corr1) / (np.sqrt(vv / corr2) + cfg.adam_eps)


def train(m: MLPModel, train_x, train_y, val_x, val_y, cfg: TrainConfig = TrainConfig()) -> MLPModel:
    """Mini-batch Adam with early stopping on validation Huber loss.

    Stops once the validation loss has not improved for `patience`
    consecutive epochs (or at the epoch limit) and returns a model
    carrying the weights of the best validation epoch.
    """
    tx = np.asarray(getattr(train_x, "values", train_x), dtype=float)
    ty = np.asarray(getattr(train_y, "values", train_y), dtype=float)
    vx = np.asarray(getattr(val_x, "values", val_x), dtype=float)
    vy = np.asarray(getattr(val_y, "values", val_y), dtype=float)
    if tx.shape[0] == 0 or vx.shape[0] == 0:
        raise ValueError("training and validation sets must be nonempty")
    if tx.shape[1] != m.layout.n_inputs or ty.shape[1] != m.layout.n_outputs:
        raise ValueError("data widths do not match the model layout")

    model = m.copy()
    model.normalizer = Normalizer.from_data(tx)
    txn = model.normalizer.apply(tx)
    # Forward/backward below work on pre-normalized arrays via a pass-through.
    runner = MLPModel(model.layout, model.weights, model.biases,
                      Normalizer.identity(model.layout.n_inputs))
    vxn = model.normalizer.apply(vx)

    gen = rng.stream(cfg.seed)
    adam_w = AdamState(model.weights)
    adam_b = AdamState(model.biases)
    n = tx.shape[0]
    best_val = np.inf
    best_weights = None
    streak = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n, gen)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, gw, gb = loss_and_grads(runner, txn[idx], ty[idx], cfg.huber_delta)
            if not np.isfinite(loss):
                raise ValueError(f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}")
            adam_w.step(model.weights, gw, cfg)
            adam_b.step(model.biases, gb, cfg)
            epoch_loss += loss * idx.shape[0]
        val_loss = huber_loss(forward(runner, vxn), vy, cfg.huber_delta)
        model.history["train"].append(epoch_loss / n)
        model.history["val"].append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_weights = ([w.copy() for w in model.weights], [b.copy() for b in model.biases])
            model.best_epoch = epoch
            streak = 0
        else:
            streak += 1
            if streak >= cfg.patience:
                break
    if best_weights is not None:
        model.weights, model.biases = best_weights
    return model


def predict_set(m: MLPModel, profiles: ProfileSet) -> DataMatrix:
    """Flatten, normalize, forward; returns the flux matrix (n_half wide)."""
    x = flatten(profiles, "inputs")
    if x.n_cols != m.layout.n_inputs:
        raise ValueError(
            f"profile grid provides {x.n_cols} features but the model expects {m.layout.n_inputs}"
        )
    return DataMatrix(forward(m, x.values), profiles.grid.output_labels())


# ---------------------------------------------------------------------------
# Model artifact (JSON, versioned).
# ---------------------------------------------------------------------------

def save_mlp(path, m: MLPModel) -> None:
    doc = {
        "version": MLP_FORMAT_VERSION,
        "layout": {"n_inputs": m.layout.n_inputs, "hidden": list(m.layout.hidden),
                   "n_outputs": m.layout.n_outputs},
        "normalizer": {"mean": m.normalizer.mean.tolist(), "std": m.normalizer.std.tolist()},
        "weights": [w.tolist() for w in m.weights],  # row-major per layer
        "biases": [b.tolist() for b in m.biases],
        "history": m.history,
        "best_epoch": m.best_epoch,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_mlp(path) -> MLPModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "version" not in doc:
        raise ValueError("model artifact is missing the version field")
    if doc["version"] != MLP_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc['version']}")
    layout = MLPLayout(doc["layout"]["n_inputs"], tuple(doc["layout"]["hidden"]),
                       doc["layout"]["n_outputs"])
    norm = Normalizer(np.asarray(doc["normalizer"]["mean"]), np.asarray(doc["normalizer"]["std"]))
    weights = [np.asarray(w, dtype=float) for w in doc["weights"]]
    biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
    return MLPModel(layout, weights, biases, norm, doc["history"], doc["best_epoch"])
