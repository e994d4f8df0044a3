"""Linear softmax classifier trained by plain mini-batch gradient descent."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .data import Dataset
from .losses import NUM_CLASSES, InvalidInputError, LossKind, LossSpec, batch_loss, labels_to_onehot

CHECKPOINT_FORMAT = "verdict-loss-checkpoint"
CHECKPOINT_VERSION = 1
INIT_SCALE = 0.01


class TrainingError(RuntimeError):
    pass


@dataclass
class LinearModel:
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.W.shape[0] != NUM_CLASSES or self.W.shape[1] < 1:
            raise InvalidInputError(f"W must have shape (3, d) with d >= 1, got {self.W.shape}")
        if self.b.shape != (NUM_CLASSES,):
            raise InvalidInputError(f"b must have shape (3,), got {self.b.shape}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise InvalidInputError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    @classmethod
    def zeros(cls, dim: int) -> "LinearModel":
        return cls(np.zeros((NUM_CLASSES, dim)), np.zeros(NUM_CLASSES))

    @classmethod
    def initialize(cls, dim: int, rng: np.random.Generator) -> "LinearModel":
        W = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(NUM_CLASSES, dim))
        b = rng.uniform(-INIT_SCALE, INIT_SCALE, size=NUM_CLASSES)
        return cls(W, b)


@dataclass(frozen=True)
class TrainConfig:
    loss: LossSpec = field(default_factory=LossSpec)
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 0.1
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidInputError(f"epochs must be a positive integer, got {self.epochs}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise InvalidInputError(f"batch_size must be a positive integer, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise InvalidInputError(f"learning_rate must be positive, got {self.learning_rate}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loss"] = {
            "kind": self.loss.kind.value,
            "lam": self.loss.lam,
            "weights": None if self.loss.weights is None else list(self.loss.weights),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        loss = d.pop("loss")
        weights = loss.get("weights")
        spec = LossSpec(LossKind(loss["kind"]), loss["lam"], None if weights is None else tuple(weights))
        return cls(loss=spec, **d)


@dataclass
class TrainReport:
    epoch_losses: List[float]
    dev_accuracy: float
    seed: int
    dev_predictions: np.ndarray = field(default=None, repr=False)


def forward(model: LinearModel, x) -> np.ndarray:
    """Logits ``W @ x + b`` for one feature vector or a stack of them."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.dim,):
        raise InvalidInputError(f"expected {model.dim} features, got shape {x.shape}")
    return x @ model.W.T + model.b


def predict(model: LinearModel, X) -> np.ndarray:
    # argmax returns the first maximum, so exact ties go to the lowest class index
    return np.argmax(forward(model, X), axis=-1)


def accuracy(model: LinearModel, dataset: Dataset) -> float:
    return float(np.mean(predict(model, dataset.features) == dataset.labels))


def gradient_step(model: LinearModel, spec: LossSpec, X: np.ndarray, labels: np.ndarray, lr: float) -> float:
    """One gradient-descent update on a batch, in place. Returns the batch loss before the step."""
    with np.errstate(over="ignore", invalid="ignore"):
        Z = forward(model, X)
    if not np.all(np.isfinite(Z)):
        raise TrainingError("non-finite logits")
    res = batch_loss(spec, labels_to_onehot(labels), Z)
    if not np.isfinite(res.value):
        raise TrainingError(f"non-finite loss {res.value}")
    model.W -= lr * (res.grad_z.T @ X)
    model.b -= lr * res.grad_z.sum(axis=0)
    return res.value


def train(dataset: Dataset, dev: Dataset, config: TrainConfig) -> Tuple[LinearModel, TrainReport]:
    """Fit a linear model with mini-batch SGD; fully determined by ``config.seed``."""
    if len(dataset) == 0 or len(dev) == 0:
        raise InvalidInputError("training and dev splits must be non-empty")
    if dataset.dim != dev.dim:
        raise InvalidInputError(f"feature dimensions differ: train {dataset.dim}, dev {dev.dim}")
    rng = np.random.default_rng(config.seed)
    model = LinearModel.initialize(dataset.dim, rng)
    X, y = dataset.features, dataset.labels
    n = len(dataset)
    epoch_losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            try:
                value = gradient_step(model, config.loss, X[idx], y[idx], config.learning_rate)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}, batch {batch_index}: {exc}") from None
            total += value * len(idx)
        epoch_losses.append(total / n)
        if not (np.all(np.isfinite(model.W)) and np.all(np.isfinite(model.b))):
            raise TrainingError(f"epoch {epoch}: parameters diverged")
    dev_pred = predict(model, dev.features)
    report = TrainReport(epoch_losses, float(np.mean(dev_pred == dev.labels)), config.seed, dev_pred)
    return model, report


def select_best_of_n(runs: Sequence[Tuple[LinearModel, TrainReport]]) -> Tuple[LinearModel, TrainReport]:
    """The run with the highest dev accuracy; ties go to the earliest run."""
    if not runs:
        raise InvalidInputError("no runs to select from")
    best = 0
    for i, (_, report) in enumerate(runs):
        if report.dev_accuracy > runs[best][1].dev_accuracy:
            best = i
    return runs[best]


def train_best_of_n(dataset: Dataset, dev: Dataset, config: TrainConfig, n_runs: int = 3):
    """Train ``n_runs`` models with seeds ``seed, seed + 1, ...``; return (best, all runs)."""
    if n_runs < 1:
        raise InvalidInputError("n_runs must be >= 1")
    runs = []
    for i in range(n_runs):
        cfg = TrainConfig(config.loss, config.epochs, config.batch_size, config.learning_rate, config.seed + i, config.shuffle)
        runs.append(train(dataset, dev, cfg))
    return select_best_of_n(runs), runs


def save_checkpoint(model: LinearModel, config: TrainConfig, path) -> None:
    """Write a versioned JSON checkpoint. Floats are written with round-trip precision."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "d": model.dim,
        "W": model.W.ravel(order="C").tolist(),
        "b": model.b.tolist(),
        "config": config.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> Tuple[LinearModel, TrainConfig]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    d = payload["d"]
    W = np.asarray(payload["W"], dtype=float).reshape(NUM_CLASSES, d)
    return LinearModel(W, payload["b"]), TrainConfig.from_dict(payload["config"])
