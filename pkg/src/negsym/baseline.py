"""Classical 16-2-1 MLP baseline trained with binary cross-entropy.

Labels cross the module boundary as -1/+1 and are mapped to 0/1 for the
loss; a probability >= 0.5 predicts +1.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import LabeledDataset
from .fileio import atomic_write_text
from .train import AdamState, EpochMetrics, TrainConfig, adam_step


@dataclass(frozen=True)
class MlpModel:
    w1: np.ndarray  # (hidden, n_in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    @property
    def n_in(self) -> int:
        return self.w1.shape[1]

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + 1

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def unflat(self, vec: np.ndarray) -> "MlpModel":
        h, n = self.w1.shape
        vec = np.asarray(vec, dtype=np.float64)
        w1 = vec[: h * n].reshape(h, n)
        b1 = vec[h * n: h * n + h]
        w2 = vec[h * n + h: h * n + 2 * h]
        return MlpModel(w1, b1, w2, float(vec[-1]))


def init_mlp(n_in: int = 16, hidden: int = 2, seed: int = 0) -> MlpModel:
    """He-uniform weights (bound sqrt(6 / fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-1, 1, (hidden, n_in)) * np.sqrt(6.0 / n_in)
    w2 = rng.uniform(-1, 1, hidden) * np.sqrt(6.0 / hidden)
    return MlpModel(w1, np.zeros(hidden), w2, 0.0)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check_width(model: MlpModel, x: np.ndarray) -> None:
    if x.shape[-1] != model.n_in:
        raise ValueError(f"pattern width {x.shape[-1]} != model input width {model.n_in}")


def mlp_logits(model: MlpModel, patterns) -> np.ndarray:
    x = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
    _check_width(model, x)
    hidden = np.maximum(0.0, x @ model.w1.T + model.b1)
    return hidden @ model.w2 + model.b2


def mlp_forward(model: MlpModel, pattern) -> float:
    """sigmoid(w2 . relu(W1 x + b1) + b2) for one pattern."""
    x = np.asarray(pattern, dtype=np.float64).ravel()
    _check_width(model, x)
    return float(_sigmoid(mlp_logits(model, x)[0]))


def bce_loss_and_grad(model: MlpModel, patterns, labels) -> tuple[float, np.ndarray]:
    """Mean BCE over the batch and its gradient as a flat vector (same order as flat())."""
    x = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
    _check_width(model, x)
    y = (np.asarray(labels) > 0).astype(np.float64)
    pre = x @ model.w1.T + model.b1
    hidden = np.maximum(0.0, pre)
    z = hidden @ model.w2 + model.b2
    # log(1 + e^z) - y z, written to stay finite for large |z|
    loss = np.mean(np.logaddexp(0.0, z) - y * z)
    dz = (_sigmoid(z) - y) / len(y)
    g_w2 = hidden.T @ dz
    g_b2 = dz.sum()
    dpre = np.outer(dz, model.w2) * (pre > 0)
    g_w1 = dpre.T @ x
    g_b1 = dpre.sum(axis=0)
    return float(loss), np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


def mlp_evaluate(model: MlpModel, dataset: LabeledDataset) -> float:
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    preds = np.where(mlp_logits(model, dataset.patterns) >= 0, 1, -1)
    return float(np.mean(preds == dataset.labels))


def mlp_train(model: MlpModel, dataset: LabeledDataset, config: TrainConfig,
              test_set: LabeledDataset | None = None) -> tuple[MlpModel, list[EpochMetrics]]:
    """Mini-batch Adam on BCE with the same shuffling and early-stop rules as the QNN."""
    if len(dataset) == 0:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(config.seed)
    params = model.flat()
    state = AdamState.zeros_like(params)

    def metrics(epoch, m):
        loss, _ = bce_loss_and_grad(m, dataset.patterns, dataset.labels)
        row = EpochMetrics(epoch, loss, mlp_evaluate(m, dataset))
        if test_set is not None:
            row.test_acc = mlp_evaluate(m, test_set)
            row.test_acc_negated = mlp_evaluate(m, test_set.negated())
        return row

    history = [metrics(0, model)]
    best, best_acc, stale = model, history[0].test_acc, 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(dataset))
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            _, grad = bce_loss_and_grad(model, dataset.patterns[idx], dataset.labels[idx])
            params, state = adam_step(params, grad, state, config)
            model = model.unflat(params)
        history.append(metrics(epoch, model))
        if test_set is None or config.patience is None:
            best = model
            continue
        if history[-1].test_acc > best_acc:
            best, best_acc, stale = model, history[-1].test_acc, 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return best, history


def save_mlp(path, model: MlpModel, config: TrainConfig | None = None, epoch: int = 0,
             metrics: EpochMetrics | None = None) -> None:
    doc = {
        "model_kind": "mlp",
        "n_in": model.n_in,
        "hidden": model.w1.shape[0],
        "params": model.flat().tolist(),
        "epoch": epoch,
        "seed": config.seed if config else None,
        "config": asdict(config) if config else None,
        "metrics": asdict(metrics) if metrics else None,
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_mlp(path) -> tuple[MlpModel, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("model_kind") != "mlp":
        raise ValueError(f"{path} does not hold an MLP checkpoint")
    template = init_mlp(doc["n_in"], doc["hidden"])
    return template.unflat(doc["params"]), doc
