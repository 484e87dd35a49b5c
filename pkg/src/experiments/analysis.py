"""Aggregate run directories into grouped statistics and plot-ready curves."""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dataclasses import dataclass
import logging
import math

import numpy as np
import yaml

from src.agent.records import DORMANCY_COLUMNS, METRIC_COLUMNS
from src.config import settings
from src.exceptions import SchemaError
from src.experiments.io import (
    CONFIG_FILE, DORMANCY_FILE, MANIFEST_FILE, METRICS_FILE, parse_float, read_json, read_table,
    write_json, write_table,
)
from src.metrics.aggregate import bootstrap_ci, group_matrices, mean_ci
from src.seeding import make_rng
logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("x", "y", "y_lo", "y_hi", "group")
AGGREGATE_FILE = "aggregate.json"
RETURNS_CURVE_FILE = "returns_curve.csv"
DORMANCY_CURVE_FILE = "dormancy_curve.csv"


@dataclass
class RunRecord:

    path: Path
    group: str
    task: str
    seed: int
    config: Dict[str, Any]
    metrics: List[Dict[str, str]]
    dormancy: List[Dict[str, str]]


def _lookup(config: Dict[str, Any], key: str):

    node: Any = config
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            raise SchemaError(f"Run config has no key '{key}'")
        node = node[part]
    return node


def _task_of(config: Dict[str, Any], mode: str) -> str:

    if mode in ("supervised", "distill"):
        return "supervised"
    return str(config.get("env", {}).get("kind", "env"))


def _load_run(path: Path, group: Optional[str], mode: str, group_by: str) -> RunRecord:

    config = {}
    if (path / CONFIG_FILE).is_file():
        config = yaml.safe_load((path / CONFIG_FILE).read_text(encoding="utf-8")) or {}
    metrics = read_table(path / METRICS_FILE, METRIC_COLUMNS)
    dormancy = read_table(path / DORMANCY_FILE, DORMANCY_COLUMNS)
    if group_by != "group":
        group = f"{group_by}={_lookup(config, group_by)}"
    elif group is None:
        group = path.parent.name
    if metrics:
        seed = int(metrics[0]["seed"])
    elif path.name.startswith("seed_"):
        seed = int(path.name[len("seed_"):])
    else:
        raise SchemaError(f"Cannot determine the seed of run {path}")
    return RunRecord(path, group, _task_of(config, mode), seed, config, metrics, dormancy)


def collect_runs(paths: Sequence[Path], group_by: str = "group") -> List[RunRecord]:
    """Runs from recipe output dirs (via their manifest) or from single run dirs."""
    runs = []
    for path in paths:
        path = Path(path)
        manifest_path = path / MANIFEST_FILE
        if manifest_path.is_file():
            manifest = read_json(manifest_path)
            for cell in manifest.get("cells", []):
                runs.append(_load_run(path / cell["path"], cell["group"], cell.get("mode", "online"), group_by))
        elif (path / METRICS_FILE).is_file():
            runs.append(_load_run(path, None, "online", group_by))
        else:
            raise SchemaError(f"{path} is neither a recipe output dir nor a run dir")
    if not runs:
        raise SchemaError("No runs to analyze")
    return runs


def final_value(run: RunRecord, window: int) -> tuple:
    """Mean return over the last ``window`` rows with a return, else mean final loss."""
    returns = [parse_float(r["return"]) for r in run.metrics]
    returns = [v for v in returns if not math.isnan(v)]
    if returns:
        return "return", float(np.mean(returns[-window:]))
    losses = [parse_float(r["loss"]) for r in run.metrics]
    losses = [v for v in losses if not math.isnan(v)]
    if not losses:
        raise SchemaError(f"Run {run.path} logged neither returns nor losses")
    return "loss", float(np.mean(losses[-window:]))


def _in_bin(xs: np.ndarray, lower: float, upper: float, first: bool) -> np.ndarray:
    # first bin is closed on the left
    left = xs >= lower if first else xs > lower
    return left & (xs <= upper)


def _returns_curve(runs: List[RunRecord], bins: int, resamples: int) -> List[tuple]:

    rows = []
    for group in sorted({r.group for r in runs}):
        members = [r for r in runs if r.group == group]
        points = []
        for run in members:
            xs = np.array([float(m["step_env"]) for m in run.metrics if m["return"] != ""])
            ys = np.array([float(m["return"]) for m in run.metrics if m["return"] != ""])
            points.append((xs, ys))
        x_max = max((xs.max() for xs, _ in points if xs.size), default=0.0)
        if x_max <= 0:
            continue
        edges = np.linspace(0.0, x_max, bins + 1)
        for b in range(bins):
            upper = edges[b + 1]
            values = []
            for xs, ys in points:
                hit = _in_bin(xs, edges[b], upper, b == 0)
                if hit.any():
                    values.append(float(ys[hit].mean()))
            if not values:
                continue
            ci = mean_ci(values, resamples, rng=make_rng(0, "returns-curve", group, b))
            rows.append((float(upper), ci.point, ci.lo, ci.hi, group))
    return rows


def _dormancy_curve(runs: List[RunRecord], resamples: int) -> List[tuple]:

    rows = []
    for group in sorted({r.group for r in runs}):
        per_key: Dict[tuple, List[float]] = {}
        for run in (r for r in runs if r.group == group):
            totals: Dict[tuple, List[int]] = {}
            for row in run.dormancy:
                key = (float(row["tau"]), int(row["step_grad"]))
                acc = totals.setdefault(key, [0, 0])
                acc[0] += int(row["dormant_count"])
                acc[1] += int(row["layer_size"])
            for key, (dormant, live) in totals.items():
                if live:
                    per_key.setdefault(key, []).append(dormant / live)
        for tau, step in sorted(per_key):
            ci = mean_ci(per_key[(tau, step)], resamples, rng=make_rng(0, "dormancy-curve", group, step))
            rows.append((step, ci.point, ci.lo, ci.hi, f"{group}|tau={tau:g}"))
    return rows


def analyze(
    paths: Sequence[Path],
    output_dir: Optional[Path] = None,
    group_by: str = "group",
    statistic: str = "iqm",
    final_window: Optional[int] = None,
    resamples: Optional[int] = None,
    alpha: Optional[float] = None,
    curve_bins: int = 50
) -> Dict[str, Any]:
    """Grouped final-window statistic with bootstrap CIs plus curve CSVs."""
    final_window = final_window or settings.final_window_episodes
    resamples = resamples or settings.bootstrap_resamples
    alpha = alpha or settings.bootstrap_alpha
    output_dir = Path(output_dir) if output_dir is not None else Path(paths[0])

    runs = collect_runs(paths, group_by)
    metric_kinds = set()
    records = []
    for run in runs:
        kind, value = final_value(run, final_window)
        metric_kinds.add(kind)
        records.append({"group": run.group, "task": run.task, "seed": run.seed, "value": value})
    if len(metric_kinds) != 1:
        raise SchemaError(f"Runs mix incompatible final metrics: {sorted(metric_kinds)}")

    groups = []
    for group, matrix in sorted(group_matrices(records).items()):
        if not matrix.n_seeds:
            raise SchemaError(f"Group {group} is empty")
        result = bootstrap_ci(matrix, statistic, resamples, alpha, make_rng(0, "analysis", group))
        groups.append({"group": group, **result.to_dict()})
        logger.info(f"{group}: {statistic}={result.point:.4f} [{result.lo:.4f}, {result.hi:.4f}]")

    report = {
        "statistic": statistic,
        "metric": metric_kinds.pop(),
        "final_window": final_window,
        "groups": groups,
    }
    write_json(output_dir / AGGREGATE_FILE, report)
    write_table(output_dir / RETURNS_CURVE_FILE, CURVE_COLUMNS, _returns_curve(runs, curve_bins, resamples))
    write_table(output_dir / DORMANCY_CURVE_FILE, CURVE_COLUMNS, _dormancy_curve(runs, resamples))
    return report
