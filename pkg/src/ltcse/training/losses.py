from __future__ import annotations

import numpy as np

from .. import numerics as nx
from ..numerics import Tensor


def _flatten(outputs: Tensor, targets: np.ndarray) -> tuple[Tensor, np.ndarray]:
    targets = np.asarray(targets)
    b, t, o = outputs.shape
    if targets.shape == (b,):
        # per-sequence target: score the final step only
        return nx.reshape(outputs[:, t - 1, :], (b, o)), targets
    if targets.shape != (b, t):
        raise nx.ShapeError(f"targets of shape {targets.shape} do not match outputs {outputs.shape}")
    return nx.reshape(outputs, (b * t, o)), targets.reshape(-1)


def cross_entropy(outputs: Tensor, targets) -> Tensor:
    logits, y = _flatten(outputs, targets)
    n, c = logits.shape
    onehot = np.zeros((n, c))
    onehot[np.arange(n), y.astype(np.int64)] = 1.0
    return nx.neg(nx.mul(nx.reduce_sum(nx.mul(nx.log_softmax(logits, 1), Tensor._wrap(onehot))), 1.0 / n))


def squared_error(outputs: Tensor, targets) -> Tensor:
    pred, y = _flatten(outputs, targets)
    diff = nx.sub(nx.reshape(pred[:, 0:1], (pred.shape[0],)), Tensor._wrap(y.astype(np.float64)))
    return nx.mean(nx.square(diff))


def loss(outputs: Tensor, targets, task_kind: str) -> Tensor:
    if task_kind == "classification":
        return cross_entropy(outputs, targets)
    if task_kind == "regression":
        return squared_error(outputs, targets)
    raise ValueError(f"unknown task kind {task_kind!r}")


def metric(outputs: np.ndarray, targets: np.ndarray, task_kind: str) -> float:
    """Accuracy for classification, mean squared error for regression."""
    outputs = np.asarray(outputs)
    targets = np.asarray(targets)
    if targets.ndim == 1:
        outputs = outputs[:, -1, :]
    if task_kind == "classification":
        return float(np.mean(outputs.argmax(axis=-1) == targets))
    return float(np.mean((outputs[..., 0] - targets) ** 2))


def higher_is_better(task_kind: str) -> bool:
    return task_kind == "classification"
