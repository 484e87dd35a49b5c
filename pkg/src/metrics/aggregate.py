"""Robust aggregates across runs: interquartile mean and stratified bootstrap intervals."""
from typing import Callable, Dict, List, Mapping, Optional, Sequence

from dataclasses import dataclass
import logging

import numpy as np

from src.config import settings
from src.exceptions import SchemaError
logger = logging.getLogger(__name__)

Statistic = Callable[[np.ndarray], np.ndarray]


def _iqm_rows(samples: np.ndarray) -> np.ndarray:
    """IQM of every row of a 2-D array."""
    n = samples.shape[1]
    cut = n // 4
    ordered = np.sort(samples, axis=1)
    return ordered[:, cut:n - cut].mean(axis=1)


def _mean_rows(samples: np.ndarray) -> np.ndarray:
    return samples.mean(axis=1)


STATISTICS: Dict[str, Statistic] = {
    "iqm": _iqm_rows,
    "mean": _mean_rows,
}


def iqm(values: Sequence[float]) -> float:
    """Mean after dropping ``floor(n / 4)`` values from each end of the sorted list."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("iqm of an empty list is undefined")
    return float(_iqm_rows(values[None, :])[0])


@dataclass
class RunMatrix:
    """Scores indexed by ``(task, seed)``; every task must have the same seeds."""

    scores: Dict[str, Dict[int, float]]

    def __post_init__(self):

        if not self.scores:
            raise SchemaError("RunMatrix needs at least one task")
        seed_sets = {tuple(sorted(row)) for row in self.scores.values()}
        if len(seed_sets) != 1 or not next(iter(seed_sets)):
            raise SchemaError("RunMatrix has missing (task, seed) cells")

    @classmethod
    def single_task(cls, values: Sequence[float], task: str = "task") -> "RunMatrix":
        return cls({task: {i: float(v) for i, v in enumerate(values)}})

    @property
    def tasks(self) -> List[str]:
        return sorted(self.scores)

    @property
    def n_seeds(self) -> int:
        return len(next(iter(self.scores.values())))

    def strata(self) -> List[np.ndarray]:
        return [
            np.array([self.scores[task][seed] for seed in sorted(self.scores[task])], dtype=np.float64)
            for task in self.tasks
        ]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.strata())


@dataclass
class BootstrapResult:

    statistic: str
    point: float
    lo: float
    hi: float
    n_seeds: int
    n_tasks: int
    resamples: int
    alpha: float
    degenerate: bool = False

    def to_dict(self) -> Dict:
        return {
            "statistic": self.statistic,
            "point": self.point,
            "ci_lo": self.lo,
            "ci_hi": self.hi,
            "n_seeds": self.n_seeds,
            "n_tasks": self.n_tasks,
            "B": self.resamples,
            "alpha": self.alpha,
            "degenerate": self.degenerate,
        }


def bootstrap_ci(
    matrix: RunMatrix,
    statistic: str = "iqm",
    resamples: Optional[int] = None,
    alpha: Optional[float] = None,
    rng: Optional[np.random.Generator] = None
) -> BootstrapResult:
    """Percentile interval from resampling seeds with replacement inside each task.

    The interval is widened to contain the point estimate when the percentile
    interval misses it.
    """
    resamples = settings.bootstrap_resamples if resamples is None else resamples
    alpha = settings.bootstrap_alpha if alpha is None else alpha
    rng = np.random.default_rng(0) if rng is None else rng
    if resamples < 100:
        raise ValueError(f"bootstrap needs at least 100 resamples, got {resamples}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if statistic not in STATISTICS:
        raise ValueError(f"Unknown statistic: {statistic}")

    stat = STATISTICS[statistic]
    strata = matrix.strata()
    point = float(stat(matrix.flat()[None, :])[0])

    draws = []
    for values in strata:
        idx = rng.integers(0, values.size, size=(resamples, values.size))
        draws.append(values[idx])
    samples = np.concatenate(draws, axis=1)
    stats = stat(samples)
    lo, hi = np.percentile(stats, [100.0 * alpha / 2.0, 100.0 * (1.0 - alpha / 2.0)])

    degenerate = matrix.n_seeds < 2
    if degenerate:
        logger.warning(f"Degenerate bootstrap interval: {matrix.n_seeds} seed per stratum")
    return BootstrapResult(
        statistic=statistic,
        point=point,
        lo=float(min(lo, point)),
        hi=float(max(hi, point)),
        n_seeds=matrix.n_seeds,
        n_tasks=len(strata),
        resamples=resamples,
        alpha=alpha,
        degenerate=degenerate
    )


def mean_ci(
    values: Sequence[float],
    resamples: Optional[int] = None,
    alpha: Optional[float] = None,
    rng: Optional[np.random.Generator] = None
) -> BootstrapResult:
    return bootstrap_ci(RunMatrix.single_task(values), "mean", resamples, alpha, rng)


def group_matrices(records: Sequence[Mapping]) -> Dict[str, RunMatrix]:
    """Build one RunMatrix per ``group`` from ``{group, task, seed, value}`` records."""
    grouped: Dict[str, Dict[str, Dict[int, float]]] = {}
    for rec in records:
        grouped.setdefault(rec["group"], {}).setdefault(rec["task"], {})[int(rec["seed"])] = float(rec["value"])
    return {group: RunMatrix(tasks) for group, tasks in grouped.items()}
