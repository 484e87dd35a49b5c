"""Supervised stand-ins for the non-stationarity and regression studies."""
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

from dataclasses import dataclass, replace
import hashlib
import logging

import numpy as np

from src.exceptions import ConfigError, ShapeError
from src.nn.network import InitSpec, Network, build_network, dense_specs, predict
logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SupervisedTask:

    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int
    label_epoch: int = 0

    @property
    def size(self) -> int:
        return int(self.inputs.shape[0])

    def input_digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.inputs).tobytes()).hexdigest()


@dataclass(frozen=True)
class RegressionTask:

    inputs: np.ndarray
    targets: np.ndarray
    teacher: Network
    mode: Literal["random_teacher", "distillation"] = "random_teacher"


def make_classification_task(
    n: int,
    d: int,
    n_classes: int,
    seed: int,
    sigma: float = 0.5
) -> SupervisedTask:
    """Gaussian clusters around one unit-norm random center per class."""
    if n < 1 or d < 1 or n_classes < 1:
        raise ConfigError(f"Invalid task counts n={n}, d={d}, n_classes={n_classes}")
    if n % n_classes != 0:
        raise ConfigError(f"n={n} must be divisible by n_classes={n_classes}")
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")

    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    centers = rng.standard_normal((n_classes, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    labels = rng.permutation(np.repeat(np.arange(n_classes), n // n_classes))
    noise = rng.standard_normal((n, d))
    inputs = centers[labels] + sigma * noise

    labels = labels.astype(np.int64)
    labels.setflags(write=False)
    logger.info(f"Built classification task n={n} d={d} classes={n_classes} sigma={sigma}")
    return SupervisedTask(inputs=_frozen(inputs), labels=labels, n_classes=n_classes)


def shuffle_labels(task: SupervisedTask, seed: int) -> SupervisedTask:

    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    labels = task.labels[rng.permutation(task.size)]
    labels.setflags(write=False)
    return replace(task, labels=labels, label_epoch=task.label_epoch + 1)


def make_regression_task(
    inputs: np.ndarray,
    teacher_seed: int = 0,
    teacher: Optional[Network] = None,
    hidden: Sequence[int] = (64, 64),
    out_dim: int = 1,
    gain: float = 1.0
) -> RegressionTask:
    """Targets are the outputs of a frozen teacher on ``inputs``.

    Without ``teacher`` a freshly initialized network is drawn from
    ``teacher_seed`` (random-teacher mode); with one, the task distills it.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2:
        raise ShapeError(f"Regression inputs must be 2-D, got shape {inputs.shape}")

    mode = "distillation"
    if teacher is None:
        mode = "random_teacher"
        specs = [
            spec.model_copy(update={"init": InitSpec(gain=gain, stream=spec.init.stream)})
            for spec in dense_specs(inputs.shape[1], hidden, out_dim)
        ]
        teacher = build_network(specs, teacher_seed)
    elif teacher.input_dim != inputs.shape[1]:
        raise ShapeError(
            f"Teacher input dim {teacher.input_dim} does not match inputs dim {inputs.shape[1]}"
        )

    targets = predict(teacher, inputs)
    return RegressionTask(
        inputs=_frozen(inputs),
        targets=_frozen(targets),
        teacher=teacher,
        mode=mode
    )


def load_classification_csv(
    path: Union[str, Path],
    n_classes: Optional[int] = None
) -> SupervisedTask:
    """Read ``d`` feature columns plus a trailing integer label column.

    The first row must be a header.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Dataset file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        has_rows = any(line.strip() for line in f)
    try:
        [float(cell) for cell in header]
    except ValueError:
        pass
    else:
        raise ConfigError(f"{path} has no header row")
    if len(header) < 2:
        raise ConfigError(f"{path} needs at least one feature column and a label column")
    if not has_rows:
        raise ConfigError(f"{path} holds a header but no samples")

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    if data.shape[1] != len(header):
        raise ShapeError(f"{path}: rows have {data.shape[1]} columns, header has {len(header)}")

    raw_labels = data[:, -1]
    labels = raw_labels.astype(np.int64)
    if not np.array_equal(labels, raw_labels) or labels.min() < 0:
        raise ConfigError(f"{path}: label column must hold non-negative integers")
    n_classes = int(labels.max()) + 1 if n_classes is None else n_classes
    if labels.max() >= n_classes:
        raise ConfigError(f"{path}: label {labels.max()} outside n_classes={n_classes}")

    labels.setflags(write=False)
    logger.info(f"Loaded {data.shape[0]} samples with {data.shape[1] - 1} features from {path}")
    return SupervisedTask(inputs=_frozen(data[:, :-1]), labels=labels, n_classes=n_classes)
