"""Small dense classifier with hand-derived gradients.

Exactness of the input-side gradient matters more than capacity here: the
attacks consume grad_x of the cross-entropy, so backprop is written out by
hand and pinned against finite differences in the tests.  No autodiff
dependency.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from .gmm import LabeledDataset

TANH = "tanh"
RELU = "relu"


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class MlpClassifier:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]  # (out, in) per layer
    biases: list[np.ndarray]  # (out,) per layer
    activation: str = TANH

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("layer_dims needs at least input and output widths")
        if dims[-1] < 2:
            raise ValueError("final layer width must be the class count (>= 2)")
        if self.activation not in (TANH, RELU):
            raise ValueError(f"activation must be '{TANH}' or '{RELU}'")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} shapes do not chain with layer_dims")
        object.__setattr__(self, "layer_dims", dims)

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "MlpClassifier":
        return MlpClassifier(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


def init_classifier(
    layer_dims: tuple[int, ...], activation: str = TANH, seed: int = 0
) -> MlpClassifier:
    """Seeded scaled-normal init: W ~ N(0, 1/fan_in), b = 0."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return MlpClassifier(tuple(layer_dims), weights, biases, activation)


def _act(a: np.ndarray, kind: str) -> np.ndarray:
    return np.tanh(a) if kind == TANH else np.maximum(a, 0.0)


def _act_deriv(a: np.ndarray, kind: str) -> np.ndarray:
    if kind == TANH:
        t = np.tanh(a)
        return 1.0 - t * t
    return (a > 0.0).astype(float)


def _forward(clf: MlpClassifier, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns logits and the pre-activation of every hidden layer."""
    h = x
    pre_acts = []
    for i, (w, b) in enumerate(zip(clf.weights, clf.biases)):
        a = h @ w.T + b
        if i < len(clf.weights) - 1:
            pre_acts.append(a)
            h = _act(a, clf.activation)
        else:
            h = a
    return h, pre_acts


def predict_logits(clf: MlpClassifier, x: np.ndarray) -> np.ndarray:
    """Forward pass; accepts (d,) or (n, d)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != clf.input_dim:
        raise ValueError(f"input dimension {x.shape[-1]} != {clf.input_dim}")
    logits, _ = _forward(clf, x)
    return logits


def predict(clf: MlpClassifier, x: np.ndarray) -> np.ndarray:
    return np.argmax(predict_logits(clf, x), axis=-1)


def cross_entropy_from_logits(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample -log softmax(logits)[y]; accepts single or batched inputs."""
    ls = log_softmax(logits, axis=-1)
    return -np.take_along_axis(np.atleast_2d(ls), np.atleast_1d(y)[:, None], axis=-1).reshape(
        np.shape(y)
    )


def _backprop_logit_seed(clf: MlpClassifier, x: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
    """Input gradient of <dlogits, logits(x)> for a fixed logit-side seed vector."""
    _, pre_acts = _forward(clf, x)
    g = dlogits @ clf.weights[-1]
    for a, w in zip(reversed(pre_acts), reversed(clf.weights[:-1])):
        g = (g * _act_deriv(a, clf.activation)) @ w
    return g


def loss_and_input_gradient(
    clf: MlpClassifier, x: np.ndarray, y: np.ndarray | int
) -> tuple[np.ndarray | float, np.ndarray]:
    """Cross-entropy loss and its exact gradient w.r.t. the input.

    For x of shape (d,) returns (float, (d,)); for (n, d) returns ((n,), (n, d)).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    yb = np.atleast_1d(np.asarray(y, dtype=int))
    logits, _ = _forward(clf, xb)
    p = softmax(logits, axis=-1)
    loss = cross_entropy_from_logits(logits, yb)
    dlogits = p.copy()
    dlogits[np.arange(len(yb)), yb] -= 1.0
    grad = _backprop_logit_seed(clf, xb, dlogits)
    if single:
        return float(loss[0]), grad[0]
    return loss, grad


def logit_margin_and_gradient(
    clf: MlpClassifier, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Margin logit_y - max_{j != y} logit_j and its input gradient, batched."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    logits, _ = _forward(clf, x)
    masked = logits.copy()
    masked[np.arange(len(y)), y] = -np.inf
    runner_up = np.argmax(masked, axis=-1)
    margin = logits[np.arange(len(y)), y] - logits[np.arange(len(y)), runner_up]
    dlogits = np.zeros_like(logits)
    dlogits[np.arange(len(y)), y] = 1.0
    dlogits[np.arange(len(y)), runner_up] -= 1.0
    return margin, _backprop_logit_seed(clf, x, dlogits)


def train(
    clf: MlpClassifier, dataset: LabeledDataset, cfg: TrainConfig
) -> tuple[MlpClassifier, np.ndarray]:
    """Mini-batch gradient descent on the mean cross-entropy.

    Deterministic in cfg.seed; returns the trained classifier and the
    per-epoch mean-loss trace.
    """
    if len(dataset) == 0:
        raise ValueError("dataset must be nonempty")
    clf = clf.copy()
    x_all, y_all = dataset.points, dataset.labels
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    trace = np.empty(cfg.epochs)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        epoch_loss = 0.0
        for start in range(0, len(dataset), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_all[idx], y_all[idx]

            # forward with caches
            h = xb
            pre_acts, hidden = [], [h]
            for i, (w, b) in enumerate(zip(clf.weights, clf.biases)):
                a = h @ w.T + b
                if i < len(clf.weights) - 1:
                    pre_acts.append(a)
                    h = _act(a, clf.activation)
                    hidden.append(h)
                else:
                    logits = a
            p = softmax(logits, axis=-1)
            loss = float(np.mean(cross_entropy_from_logits(logits, yb)))
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            epoch_loss += loss * len(idx)

            # backward
            delta = p.copy()
            delta[np.arange(len(yb)), yb] -= 1.0
            delta /= len(yb)
            for layer in range(len(clf.weights) - 1, -1, -1):
                grad_w = delta.T @ hidden[layer]
                grad_b = delta.sum(axis=0)
                if layer > 0:
                    delta = (delta @ clf.weights[layer]) * _act_deriv(
                        pre_acts[layer - 1], clf.activation
                    )
                clf.weights[layer] -= cfg.learning_rate * grad_w
                clf.biases[layer] -= cfg.learning_rate * grad_b
        trace[epoch] = epoch_loss / len(dataset)
    return clf, trace


def accuracy(
    clf: MlpClassifier,
    dataset: LabeledDataset,
    purifier=None,
    seed: int = 0,
) -> float:
    """Fraction of correct argmax predictions, optionally after purification.

    purifier, when given, is a (points, seed) -> points callable applied
    before classification; with clean inputs this realizes standard accuracy
    and with adversarial inputs robust accuracy.
    """
    if len(dataset) == 0:
        warnings.warn("accuracy of an empty dataset is vacuously 1.0", RuntimeWarning)
        return 1.0
    pts = dataset.points
    if purifier is not None:
        pts = purifier(pts, seed)
    pred = predict(clf, pts)
    return float(np.mean(pred == dataset.labels))


def save_classifier(clf: MlpClassifier, path: str) -> None:
    """Flat text format: header with dims and activation, then per layer one
    line of row-major weights and one line of biases."""
    lines = [" ".join(str(d) for d in clf.layer_dims) + f" {clf.activation}"]
    for w, b in zip(clf.weights, clf.biases):
        lines.append(" ".join(repr(float(v)) for v in w.ravel()))
        lines.append(" ".join(repr(float(v)) for v in b))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_classifier(path: str) -> MlpClassifier:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    head = lines[0].split()
    dims = tuple(int(tok) for tok in head[:-1])
    activation = head[-1]
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        w = np.array([float(tok) for tok in lines[1 + 2 * i].split()]).reshape(fan_out, fan_in)
        b = np.array([float(tok) for tok in lines[2 + 2 * i].split()])
        weights.append(w)
        biases.append(b)
    return MlpClassifier(dims, weights, biases, activation)
