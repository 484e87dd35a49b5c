"""Execute recipe cells and write their run directories.

Each cell owns ``<output_dir>/<group>/seed_<s>/`` exclusively; the manifest
is written once, after every cell has finished.
"""
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional

import logging
import time

from src.agent.dqn import DQNConfig
from src.agent.loop import collect_random_buffer, run_offline, run_training
from src.agent.records import MetricSeries
from src.agent.supervised import run_regression, run_supervised, steps_per_epoch
from src.envs.supervised import load_classification_csv, make_classification_task, make_regression_task
from src.exceptions import ConfigError
from src.experiments.hooks import (
    DormancyHook, PruneHook, RankHook, RedoHook, ResetHook, SelectionRecycleHook,
)
from src.experiments.io import CHECKPOINT_FILE, CONFIG_FILE, MANIFEST_FILE, write_json, write_series
from src.experiments.recipes import RunCell, expected_grad_steps, recipe_registry
from src.experiments.schema import ExperimentConfig, dump_config, validate_config
from src.nn.checkpoint import load_checkpoint, save_checkpoint
from src.nn.network import build_network
from src.seeding import derive_seed
logger = logging.getLogger(__name__)


def build_hooks(config: ExperimentConfig, mode: str, measure_period: Optional[int] = None) -> list:
    """Measurement first, then interventions, then end-of-run probes."""
    period = measure_period or config.measure_period
    batch = config.scoring_batch_size
    hooks = [DormancyHook(period, config.tracked_taus(), batch)]

    recycle = config.recycle
    if recycle.enabled and recycle.mode == "threshold":
        hooks.append(RedoHook(recycle.schedule.period, recycle.tau, recycle.strategy, batch))
    elif recycle.enabled:
        schedule = recycle.schedule
        if schedule.fraction_schedule == "cosine" and schedule.horizon is None:
            schedule = schedule.model_copy(update={"horizon": max(1, expected_grad_steps(config.dqn))})
        hooks.append(SelectionRecycleHook(recycle.selection, schedule, recycle.strategy, batch))

    if config.reset.enabled:
        hooks.append(ResetHook(config.reset.period, config.reset.k))

    if config.prune.enabled:
        total = expected_grad_steps(config.dqn) if mode == "online" else config.offline.grad_steps
        steps = [max(1, int(round(f * total))) for f in config.prune.fractions]
        hooks.append(PruneHook(steps, config.prune.tau, config.prune.eval_episodes, batch))

    if mode in ("online", "offline", "fixed_targets"):
        hooks.append(RankHook(config.rank_batch_size))
    return hooks


def _offline_buffer(config: ExperimentConfig, seed: int):
    return collect_random_buffer(config.env, config.offline.dataset_size, config.dqn, derive_seed(seed, "dataset"))


def _hidden(dqn: DQNConfig) -> List[int]:
    return [h * dqn.network.width_multiplier for h in dqn.network.hidden]


def execute_cell(cell: RunCell) -> MetricSeries:

    config, seed, mode = cell.config, cell.seed, cell.mode
    tau = config.report_tau

    if mode == "online":
        return run_training(config.env, config.dqn, build_hooks(config, mode), seed, tau)

    if mode == "offline":
        buffer = _offline_buffer(config, seed)
        return run_offline(
            buffer, config.dqn, config.env.n_actions, config.offline.grad_steps,
            build_hooks(config, mode), seed, tau
        )

    if mode == "fixed_targets":
        buffer = _offline_buffer(config, seed)
        targets = make_regression_task(
            buffer.states(),
            teacher_seed=derive_seed(config.offline.teacher_seed, seed),
            hidden=_hidden(config.dqn),
            out_dim=config.env.n_actions
        )
        return run_offline(
            buffer, config.dqn, config.env.n_actions, config.offline.grad_steps,
            build_hooks(config, mode), seed, tau, fixed_targets=targets
        )

    if mode == "supervised":
        if config.task.csv_path:
            task = load_classification_csv(config.task.csv_path)
        else:
            task = make_classification_task(
                config.task.n, config.task.d, config.task.n_classes, derive_seed(seed, "task"), config.task.sigma
            )
        per_epoch = steps_per_epoch(task.size, config.supervised.batch_size)
        return run_supervised(task, config.supervised, build_hooks(config, mode, per_epoch), seed, tau)

    if mode == "distill":
        teacher_path, pretrained_path = config.distill.require_checkpoints()
        teacher = load_checkpoint(teacher_path)
        pretrained = load_checkpoint(pretrained_path)
        inputs = collect_random_buffer(
            config.env, config.distill.n_inputs, config.dqn, derive_seed(seed, "distill-inputs")
        ).states()
        task = make_regression_task(inputs, teacher=teacher)
        if config.distill.init == "pretrained":
            student = pretrained
        else:
            student = build_network(pretrained.specs, derive_seed(seed, "init"))
        per_epoch = steps_per_epoch(inputs.shape[0], config.supervised.batch_size)
        return run_regression(task, config.supervised, build_hooks(config, mode, per_epoch), seed, tau, student)

    raise ConfigError(f"Unknown run mode: {mode}")


def run_cell(cell: RunCell, output_dir: Path) -> Dict[str, Any]:

    run_dir = Path(output_dir) / cell.cell_id
    started = time.perf_counter()
    logger.info(f"Running cell {cell.cell_id} ({cell.mode})")

    series = execute_cell(cell)
    write_series(series, run_dir)
    (run_dir / CONFIG_FILE).write_text(dump_config(cell.config), encoding="utf-8")
    if cell.config.save_checkpoint and series.final_network is not None:
        save_checkpoint(series.final_network, run_dir / CHECKPOINT_FILE)

    logger.info(f"Cell {cell.cell_id} finished in {time.perf_counter() - started:.1f}s")
    return {
        "cell": cell.cell_id,
        "group": cell.group,
        "mode": cell.mode,
        "seed": cell.seed,
        "path": cell.cell_id,
        "counters": dict(series.counters),
    }


def _run_payload(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Process-pool entry point; cells travel as plain data."""
    cell = RunCell(
        group=payload["group"],
        mode=payload["mode"],
        seed=payload["seed"],
        config=validate_config(payload["config"])
    )
    return run_cell(cell, Path(payload["output_dir"]))


def run_recipe(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    jobs: int = 1
) -> Path:
    """Run every cell of ``config.recipe`` and return the manifest path."""
    output_dir = Path(output_dir) if output_dir is not None else config.resolved_output_dir()
    cells = recipe_registry.expand(config)
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / CONFIG_FILE).write_text(dump_config(config), encoding="utf-8")

    if jobs <= 1:
        results = [run_cell(cell, output_dir) for cell in cells]
    else:
        payloads = [
            {
                "group": cell.group,
                "mode": cell.mode,
                "seed": cell.seed,
                "config": cell.config.model_dump(mode="json"),
                "output_dir": str(output_dir),
            }
            for cell in cells
        ]
        logger.info(f"Running {len(cells)} cells on {jobs} worker processes")
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(_run_payload, payloads))

    manifest = {
        "recipe": config.recipe,
        "n_cells": len(results),
        "groups": sorted({r["group"] for r in results}),
        "seeds": list(config.seeds),
        "cells": results,
    }
    path = write_json(output_dir / MANIFEST_FILE, manifest)
    logger.info(f"Recipe {config.recipe} complete: {len(results)} cells, manifest at {path}")
    return path
