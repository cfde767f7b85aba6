"""Hinge-loss training of the QNN with parameter-shift gradients and Adam."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import branch
from .data import LabeledDataset
from .fileio import atomic_write_text
from .qnn import QnnModel, features, forward

SHIFT = np.pi / 2
METRICS_HEADER = ["epoch", "train_loss", "train_acc", "test_acc", "test_acc_negated"]
METHODS = ("branch", "dense")


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-7
    epochs: int = 30
    seed: int = 0
    shots: int | None = None  # None = exact expectations
    patience: int | None = 5  # early stop on stale test accuracy; None disables
    init_scale: float = 0.1
    method: str = "branch"

    def __post_init__(self):
        for name in ("learning_rate", "adam_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 or None")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, params: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(params, dtype=np.float64), np.zeros_like(params, dtype=np.float64))


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float = float("nan")
    test_acc_negated: float = float("nan")


@dataclass
class TrainResult:
    model: QnnModel
    history: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int = 0


# --- loss and gradients -------------------------------------------------------


def _check_label(label) -> None:
    if label not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {label!r}")


def hinge_loss(logit: float, label: int) -> float:
    _check_label(label)
    return max(0.0, 1.0 - label * logit)


def _hinge(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - labels * logits)


def init_model(arch, n_data: int | None = None, seed: int = 0, scale: float = 0.1,
               measurement: str = "Z") -> QnnModel:
    """QNN with angles drawn from Uniform(-scale, scale)."""
    model = QnnModel.create(arch, n_data, measurement=measurement)
    rng = np.random.default_rng(seed)
    return model.with_theta(rng.uniform(-scale, scale, size=model.theta.shape))


def batch_logits(model: QnnModel, patterns, method: str = "branch") -> np.ndarray:
    """Exact logits for a stack of patterns (m, N)."""
    patterns = np.atleast_2d(np.asarray(patterns))
    if method == "branch":
        return branch.logits(model.arch.layers, model.theta, patterns, model.measurement)
    return np.array([forward(model, p) for p in patterns])


def batch_features(model: QnnModel, patterns, method: str = "branch") -> np.ndarray:
    patterns = np.atleast_2d(np.asarray(patterns))
    if method == "branch":
        return branch.features(model.arch.layers, model.theta, patterns, model.measurement)
    return np.array([features(model, p) for p in patterns])


def _shifted_thetas(theta: np.ndarray) -> np.ndarray:
    """Stack (n_params, 2, L, N): +shift then -shift for each parameter, row-major."""
    n_layers, n = theta.shape
    eye = np.eye(n_layers * n).reshape(-1, n_layers, n)
    return theta[None, None] + SHIFT * np.stack([eye, -eye], axis=1)


def param_shift_grad(model: QnnModel, pattern, label: int, layer: int, qubit: int) -> float:
    """[L(f at theta + pi/2) - L(f at theta - pi/2)] / 2 for one parameter."""
    _check_label(label)
    if not (0 <= layer < model.arch.n_layers and 0 <= qubit < model.n_data):
        raise ValueError(f"parameter ({layer}, {qubit}) out of range")
    losses = []
    for sign in (1, -1):
        theta = model.theta.copy()
        theta[layer, qubit] += sign * SHIFT
        losses.append(hinge_loss(forward(model.with_theta(theta), pattern), label))
    return (losses[0] - losses[1]) / 2


def grad_full(model: QnnModel, batch, method: str = "branch", shots: int | None = None,
              rng: np.random.Generator | None = None) -> np.ndarray:
    """Mean parameter-shift gradient of the hinge loss over ``batch``.

    ``batch`` is a sequence of (pattern, label) pairs or a LabeledDataset.
    """
    if isinstance(batch, LabeledDataset):
        patterns, labels = batch.patterns, batch.labels.astype(np.float64)
    else:
        if len(batch) == 0:
            raise ValueError("batch is empty")
        patterns = np.array([p for p, _ in batch])
        labels = np.array([lab for _, lab in batch], dtype=np.float64)
    if len(labels) == 0:
        raise ValueError("batch is empty")
    if not np.all(np.isin(labels, (-1, 1))):
        raise ValueError("labels must be -1 or +1")

    shifted = _shifted_thetas(model.theta)  # (P, 2, L, N)
    if method == "branch":
        f = branch.logits(model.arch.layers, shifted[None], patterns[:, None, None, :],
                          model.measurement)  # (B, P, 2)
    elif method == "dense":
        f = np.empty((len(labels),) + shifted.shape[:2])
        for b, pat in enumerate(patterns):
            for p in range(shifted.shape[0]):
                for s in range(2):
                    f[b, p, s] = forward(model.with_theta(shifted[p, s]), pat)
    else:
        raise ValueError(f"method must be one of {METHODS}")
    if shots is not None:
        rng = rng if rng is not None else np.random.default_rng()
        p_minus = np.clip((1.0 - f) / 2.0, 0.0, 1.0)
        f = (shots - 2 * rng.binomial(shots, p_minus)) / shots
    losses = _hinge(f, labels[:, None, None])
    per_example = (losses[..., 0] - losses[..., 1]) / 2  # (B, P)
    return per_example.mean(axis=0).reshape(model.theta.shape)


# --- optimiser ----------------------------------------------------------------


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              config: TrainConfig) -> tuple[np.ndarray, AdamState]:
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.first_moment.shape != params.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"moments {state.first_moment.shape}"
        )
    b1, b2 = config.adam_beta1, config.adam_beta2
    step = state.step + 1
    m = b1 * state.first_moment + (1 - b1) * grads
    v = b2 * state.second_moment + (1 - b2) * grads * grads
    m_hat = m / (1 - b1**step)
    v_hat = v / (1 - b2**step)
    new = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return new, AdamState(m, v, step)


# --- loop -----------------------------------------------------------------------


def evaluate(model: QnnModel, dataset: LabeledDataset, method: str = "branch") -> float:
    """Fraction of patterns whose predicted label matches."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    logits = batch_logits(model, dataset.patterns, method)
    preds = np.where(logits >= 0, 1, -1)
    return float(np.mean(preds == dataset.labels))


def mean_loss(model: QnnModel, dataset: LabeledDataset, method: str = "branch") -> float:
    logits = batch_logits(model, dataset.patterns, method)
    return float(_hinge(logits, dataset.labels).mean())


def _epoch_metrics(epoch, model, train_set, test_set, method) -> EpochMetrics:
    row = EpochMetrics(epoch, mean_loss(model, train_set, method), evaluate(model, train_set, method))
    if test_set is not None:
        row.test_acc = evaluate(model, test_set, method)
        row.test_acc_negated = evaluate(model, test_set.negated(), method)
    return row


def train(model: QnnModel, dataset: LabeledDataset, config: TrainConfig,
          test_set: LabeledDataset | None = None,
          callback: Callable[[int, QnnModel], None] | None = None) -> TrainResult:
    """Mini-batch Adam on the hinge loss.

    Shuffles with ``config.seed`` every epoch and keeps the final partial batch.
    With a test set and ``config.patience``, training stops once test accuracy
    has not improved for that many epochs and the best model is returned.
    ``callback(epoch, model)`` runs after every epoch, including epoch 0.
    """
    if len(dataset) == 0:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(config.seed)
    shot_rng = np.random.default_rng([config.seed, 1])
    state = AdamState.zeros_like(model.theta)
    result = TrainResult(model, [_epoch_metrics(0, model, dataset, test_set, config.method)])
    if callback:
        callback(0, model)
    best_acc, stale = result.history[0].test_acc, 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(dataset))
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            batch = LabeledDataset(dataset.patterns[idx], dataset.labels[idx])
            grads = grad_full(model, batch, config.method, config.shots, shot_rng)
            theta, state = adam_step(model.theta, grads, state, config)
            model = model.with_theta(theta)
        row = _epoch_metrics(epoch, model, dataset, test_set, config.method)
        result.history.append(row)
        if callback:
            callback(epoch, model)
        if test_set is None or config.patience is None:
            result.model, result.best_epoch = model, epoch
            continue
        if row.test_acc > best_acc:
            best_acc, stale = row.test_acc, 0
            result.model, result.best_epoch = model, epoch
        else:
            stale += 1
            if stale >= config.patience:
                break
    return result


# --- files ----------------------------------------------------------------------


def save_checkpoint(path, model: QnnModel, config: TrainConfig | None = None, epoch: int = 0,
                    metrics: EpochMetrics | None = None, extra: dict | None = None) -> None:
    """JSON checkpoint; floats are written with round-trip precision."""
    doc = {
        "model_kind": "qnn",
        "arch": str(model.arch),
        "n_data": model.n_data,
        "measurement": model.measurement,
        "theta": model.theta.tolist(),
        "epoch": epoch,
        "seed": config.seed if config else None,
        "config": asdict(config) if config else None,
        "metrics": asdict(metrics) if metrics else None,
    }
    if extra:
        doc.update(extra)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_checkpoint(path) -> tuple[QnnModel, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("model_kind", "qnn") != "qnn":
        raise ValueError(f"{path} holds a {doc['model_kind']!r} model, not a QNN")
    model = QnnModel.create(doc["arch"], doc["n_data"], doc["theta"], doc["measurement"])
    return model, doc


def write_metrics(path, history: list[EpochMetrics]) -> None:
    rows = [",".join(METRICS_HEADER)]
    for h in history:
        rows.append(",".join(repr(v) if isinstance(v, float) else str(v)
                             for v in (h.epoch, h.train_loss, h.train_acc, h.test_acc,
                                       h.test_acc_negated)))
    atomic_write_text(path, "\n".join(rows) + "\n")


def read_metrics(path) -> list[EpochMetrics]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [EpochMetrics(int(r["epoch"]), float(r["train_loss"]), float(r["train_acc"]),
                             float(r["test_acc"]), float(r["test_acc_negated"])) for r in reader]
