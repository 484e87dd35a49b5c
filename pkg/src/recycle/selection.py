"""Fixed-fraction neuron selection and its schedules."""
from typing import List, Literal, Optional, Sequence

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import settings
from src.dormancy.scores import dormant_set
from src.nn.network import Network
logger = logging.getLogger(__name__)

SelectionKind = Literal["threshold", "lowest_score", "inverse_score", "random", "utility"]


class SelectionStrategy(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SelectionKind = "threshold"
    tau: float = Field(0.1, ge=0.0)
    fraction: float = Field(0.1, ge=0.0, le=1.0)

    def parameter(self) -> float:
        return self.tau if self.kind == "threshold" else self.fraction


def selection_count(fraction: float, live: int) -> int:
    # round() guards against 0.1 * 30 = 3.0000000000000004
    return min(live, int(math.ceil(round(fraction * live, 9))))


def utility_scores(net: Network, layer: int, scores: np.ndarray) -> np.ndarray:
    """``score * ||outgoing row||_1``: instantaneous saliency, not a running average."""
    return scores * np.abs(net.weights[layer + 1]).sum(axis=1)


def select_for_recycling(
    scores: Sequence[np.ndarray],
    strategy: SelectionStrategy,
    rng: np.random.Generator,
    net: Optional[Network] = None
) -> List[np.ndarray]:
    """Per-layer sorted index arrays; ties resolve to the lowest index."""
    if strategy.kind == "utility" and net is None:
        raise ValueError("utility selection needs the network's outgoing weights")

    selected = []
    for layer, s in enumerate(scores):
        pruned = net.masks[layer] if net is not None else np.zeros(s.shape[0], dtype=bool)
        if strategy.kind == "threshold":
            selected.append(dormant_set(s, strategy.tau, pruned))
            continue

        live = np.flatnonzero(~pruned)
        k = selection_count(strategy.fraction, live.size)
        if k == 0:
            selected.append(np.zeros(0, dtype=np.int64))
            continue

        if strategy.kind == "random":
            chosen = rng.choice(live, size=k, replace=False)
        else:
            if strategy.kind == "utility":
                key = utility_scores(net, layer, s)[live]
            elif strategy.kind == "inverse_score":
                key = -s[live]
            else:
                key = s[live]
            chosen = live[np.argsort(key, kind="stable")[:k]]
        selected.append(np.sort(chosen).astype(np.int64))
    return selected


def cosine_fraction(t: int, horizon: int, start: float = 0.1) -> float:
    """Fraction decaying from ``start`` at ``t=0`` to 0 at ``t=horizon``."""
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if t < 0 or t > horizon:
        raise ValueError(f"t={t} outside [0, {horizon}]")
    return 0.5 * start * (1.0 + math.cos(math.pi * t / horizon))


class RecycleSchedule(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

    period: int = Field(default_factory=lambda: settings.recycle_period, ge=1)
    fraction_schedule: Literal["none", "cosine"] = "none"
    start: float = Field(0.1, ge=0.0, le=1.0)
    horizon: Optional[int] = Field(None, ge=1)

    def fraction_at(self, step_grad: int, fixed: float) -> float:

        if self.fraction_schedule == "none":
            return fixed
        if self.horizon is None:
            raise ValueError("cosine fraction schedule needs a horizon")
        return cosine_fraction(min(step_grad, self.horizon), self.horizon, self.start)
