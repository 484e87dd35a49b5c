from typing import Literal, Tuple

import logging

import numpy as np

from src.exceptions import ConfigError, ShapeError
logger = logging.getLogger(__name__)

LossKind = Literal["mse", "huber", "cross_entropy"]


def _class_indices(target: np.ndarray, n_rows: int, n_classes: int) -> np.ndarray:

    target = np.asarray(target)
    if target.ndim == 2 and target.shape[1] == 1:
        target = target[:, 0]
    if target.ndim != 1 or target.shape[0] != n_rows:
        raise ShapeError(f"Class targets shape {target.shape} incompatible with {n_rows} rows")
    if n_rows == 0:
        raise ShapeError("Cross-entropy needs at least one row")
    labels = target.astype(np.int64)
    if not np.array_equal(labels, target) or labels.min() < 0 or labels.max() >= n_classes:
        raise ShapeError(f"Class targets must be integers in [0, {n_classes}), got {np.unique(target).tolist()}")
    return labels


def loss_and_grad(
    kind: LossKind,
    pred: np.ndarray,
    target: np.ndarray,
    delta: float = 1.0
) -> Tuple[float, np.ndarray]:
    """Mean-reduced loss and its gradient with respect to ``pred``.

    ``mse`` averages ``r**2`` over every element; ``huber`` averages
    ``0.5 r**2`` inside ``delta`` and ``delta (|r| - delta / 2)`` outside;
    ``cross_entropy`` treats ``pred`` as logits and ``target`` as class indices
    and averages over rows.
    """
    pred = np.asarray(pred, dtype=np.float64)

    if kind == "cross_entropy":
        if pred.ndim != 2:
            raise ShapeError(f"Logits must be 2-D, got shape {pred.shape}")
        n, n_classes = pred.shape
        labels = _class_indices(target, n, n_classes)
        shifted = pred - pred.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        sums = exp.sum(axis=1, keepdims=True)
        log_probs = shifted - np.log(sums)
        rows = np.arange(n)
        loss = float(-log_probs[rows, labels].mean())
        grad = exp / sums
        grad[rows, labels] -= 1.0
        return loss, grad / n

    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"Prediction shape {pred.shape} != target shape {target.shape}")
    residual = pred - target
    count = residual.size

    if kind == "mse":
        return float(np.mean(residual * residual)), 2.0 * residual / count

    if kind == "huber":
        abs_r = np.abs(residual)
        quadratic = abs_r <= delta
        per_item = np.where(quadratic, 0.5 * residual * residual, delta * (abs_r - 0.5 * delta))
        grad = np.clip(residual, -delta, delta) / count
        return float(per_item.mean()), grad

    raise ConfigError(f"Unknown loss kind: {kind}")
