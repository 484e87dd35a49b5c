"""Logged measurement rows and the per-run series that collects them."""
from typing import Dict, List, Optional, Tuple

from dataclasses import dataclass, field
import math

from src.nn.network import Network

METRIC_COLUMNS: Tuple[str, ...] = (
    "step_env", "step_grad", "episode", "return", "loss",
    "dormant_frac_tau0", "dormant_frac_tau", "recycled_count", "seed",
)
DORMANCY_COLUMNS: Tuple[str, ...] = (
    "step_grad", "layer", "tau", "dormant_count", "layer_size", "dormant_fraction", "overlap",
)
RECYCLE_COLUMNS: Tuple[str, ...] = (
    "step_grad", "layer", "n_recycled", "strategy", "tau_or_fraction",
)
PROBE_COLUMNS: Tuple[str, ...] = ("step_grad", "name", "value")


def format_value(value) -> str:
    """Stable text form for CSV cells; NaN and None become empty cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class MetricRow:

    step_env: int
    step_grad: int
    episode: int
    episode_return: float
    loss: float
    dormant_frac_tau0: float
    dormant_frac_tau: float
    recycled_count: int
    seed: int

    def values(self) -> Tuple:
        return (
            self.step_env, self.step_grad, self.episode, self.episode_return, self.loss,
            self.dormant_frac_tau0, self.dormant_frac_tau, self.recycled_count, self.seed,
        )


@dataclass(frozen=True)
class DormancyRow:

    step_grad: int
    layer: int
    tau: float
    dormant_count: int
    layer_size: int
    dormant_fraction: float
    overlap: Optional[float]

    def values(self) -> Tuple:
        return (
            self.step_grad, self.layer, self.tau, self.dormant_count,
            self.layer_size, self.dormant_fraction, self.overlap,
        )


@dataclass(frozen=True)
class RecycleRow:

    step_grad: int
    layer: int
    n_recycled: int
    strategy: str
    tau_or_fraction: float

    def values(self) -> Tuple:
        return (self.step_grad, self.layer, self.n_recycled, self.strategy, self.tau_or_fraction)


@dataclass(frozen=True)
class ProbeRow:

    step_grad: int
    name: str
    value: float

    def values(self) -> Tuple:
        return (self.step_grad, self.name, self.value)


@dataclass
class MetricSeries:
    """Everything one run logs.

    Metric rows are strictly ordered by ``(step_grad, step_env)``: episodes that
    end during warm-up all carry ``step_grad == 0`` and are told apart by
    ``step_env``. The other tables are ordered by ``step_grad``.
    """

    seed: int
    rows: List[MetricRow] = field(default_factory=list)
    dormancy: List[DormancyRow] = field(default_factory=list)
    recycle_events: List[RecycleRow] = field(default_factory=list)
    probes: List[ProbeRow] = field(default_factory=list)
    final_network: Optional[Network] = None
    counters: Dict[str, int] = field(default_factory=dict)

    def probe_values(self, name: str) -> List[float]:
        return [p.value for p in self.probes if p.name == name]

    def returns(self) -> List[float]:
        return [r.episode_return for r in self.rows if not math.isnan(r.episode_return)]
