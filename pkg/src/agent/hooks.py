from typing import Any, Callable, Dict, Optional, Sequence

from dataclasses import dataclass, field
import logging

import numpy as np

from src.agent.records import MetricSeries
from src.envs.base import EnvSpec
from src.nn.network import Network
from src.nn.optim import OptState
logger = logging.getLogger(__name__)

StateSampler = Callable[[int, np.random.Generator], np.ndarray]


@dataclass
class HookContext:
    """What a hook may read or mutate between two gradient steps.

    ``agent`` is any object exposing ``online`` and ``opt``; hooks mutate the
    online network in place.
    """

    agent: Any
    series: MetricSeries
    seed: int
    sample_states: StateSampler
    report_tau: float = 0.1
    env_spec: Optional[EnvSpec] = None
    step_env: int = 0
    step_grad: int = 0
    latest_fractions: Dict[float, float] = field(default_factory=dict)
    recycled_since_row: int = 0
    stop: bool = False
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def net(self) -> Network:
        return self.agent.online

    @property
    def opt(self) -> OptState:
        return self.agent.opt

    def fraction(self, tau: float) -> float:
        return self.latest_fractions.get(tau, float("nan"))


class TrainingHook:
    """Base class; subclasses override ``on_grad_step`` and optionally ``on_finish``."""

    name = "hook"

    def __init__(self, period: int = 1):

        if period < 1:
            raise ValueError(f"Hook period must be >= 1, got {period}")
        self.period = period

    def due(self, step_grad: int) -> bool:
        return step_grad > 0 and step_grad % self.period == 0

    def on_grad_step(self, ctx: HookContext) -> None:
        pass

    def on_finish(self, ctx: HookContext) -> None:
        pass


def run_hooks(hooks: Sequence[TrainingHook], ctx: HookContext) -> None:

    for hook in hooks:
        if hook.due(ctx.step_grad):
            hook.on_grad_step(ctx)


def finish_hooks(hooks: Sequence[TrainingHook], ctx: HookContext) -> None:

    for hook in hooks:
        hook.on_finish(ctx)
