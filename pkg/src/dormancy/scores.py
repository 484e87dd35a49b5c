"""Neuron dormancy scores.

A neuron's score is its batch-mean absolute activation divided by the mean of
those values over the unpruned neurons of its layer, so scores of a live
layer average exactly 1. A layer whose mean is exactly 0 scores 0 everywhere.
Pruned neurons score 0 and never enter a dormant set.
"""
from typing import Dict, List, Optional, Sequence

from dataclasses import dataclass, field
import logging

import numpy as np

from src.exceptions import NonFiniteError, ShapeError
from src.nn.network import ActivationTrace
from src.telemetry import dormancy_counter
logger = logging.getLogger(__name__)


def layer_scores(activations: np.ndarray, pruned: Optional[np.ndarray] = None) -> np.ndarray:

    if activations.ndim != 2 or activations.shape[0] == 0:
        raise ShapeError("Scoring needs a non-empty batch x neurons activation matrix")
    if not np.isfinite(activations).all():
        raise NonFiniteError("Activation trace contains non-finite values")

    mean_abs = np.abs(activations).mean(axis=0)
    live = np.ones(mean_abs.shape[0], dtype=bool) if pruned is None else ~pruned
    if not live.any():
        return np.zeros_like(mean_abs)
    layer_mean = mean_abs[live].mean()
    if layer_mean == 0.0:
        return np.zeros_like(mean_abs)
    scores = np.where(live, mean_abs / layer_mean, 0.0)
    return scores


def neuron_scores(trace: ActivationTrace) -> List[np.ndarray]:

    if not trace.activations or trace.batch_size == 0:
        raise ShapeError("Cannot score an empty activation trace")
    masks = trace.masks if trace.masks else [None] * len(trace.activations)
    return [layer_scores(a, m) for a, m in zip(trace.activations, masks)]


def dormant_set(scores: np.ndarray, tau: float, pruned: Optional[np.ndarray] = None) -> np.ndarray:
    """Sorted indices with ``score <= tau``, excluding pruned neurons."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    hit = scores <= tau
    if pruned is not None:
        hit &= ~pruned
    return np.flatnonzero(hit)


@dataclass
class LayerDormancy:

    layer: int
    scores: np.ndarray
    dormant: np.ndarray
    live_count: int

    @property
    def size(self) -> int:
        return int(self.scores.shape[0])

    @property
    def dormant_fraction(self) -> float:
        return len(self.dormant) / self.live_count if self.live_count else 0.0


@dataclass
class DormancyReport:

    tau: float
    layers: List[LayerDormancy]
    batch_id: str = ""
    extra: Dict[str, float] = field(default_factory=dict)

    def dormant_sets(self) -> List[np.ndarray]:
        return [layer.dormant for layer in self.layers]

    @property
    def dormant_count(self) -> int:
        return sum(len(layer.dormant) for layer in self.layers)

    @property
    def live_count(self) -> int:
        return sum(layer.live_count for layer in self.layers)


def dormancy_report(
    trace: ActivationTrace,
    tau: float,
    batch_id: str = "",
    scores: Optional[Sequence[np.ndarray]] = None
) -> DormancyReport:

    if scores is None:
        scores = neuron_scores(trace)
    layers = []
    for i, s in enumerate(scores):
        pruned = trace.masks[i] if trace.masks else np.zeros(s.shape[0], dtype=bool)
        layers.append(LayerDormancy(
            layer=i,
            scores=s,
            dormant=dormant_set(s, tau, pruned),
            live_count=int((~pruned).sum())
        ))
    dormancy_counter.inc()
    return DormancyReport(tau=tau, layers=layers, batch_id=batch_id)


def dormant_fraction(report: DormancyReport) -> float:

    live = report.live_count
    if live == 0:
        raise ShapeError("Network has no unpruned hidden neurons")
    return report.dormant_count / live
