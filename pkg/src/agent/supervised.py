"""Minibatch training on supervised stand-in tasks.

Rows are logged once per epoch and reuse the ``MetricRow`` schema: ``step_env``
and ``episode`` hold the epoch, ``return`` holds train accuracy (classification)
and is empty for regression.
"""
from typing import Literal, Optional, Sequence

from dataclasses import dataclass
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.agent.dqn import NetworkConfig
from src.agent.hooks import HookContext, TrainingHook, finish_hooks, run_hooks
from src.agent.records import MetricRow, MetricSeries, ProbeRow
from src.envs.supervised import RegressionTask, SupervisedTask, shuffle_labels
from src.exceptions import ShapeError
from src.nn.losses import loss_and_grad
from src.nn.network import Network, backward, build_network, copy_network, forward, predict
from src.nn.optim import OptState, opt_step
from src.seeding import derive_seed, make_rng
from src.telemetry import grad_steps_counter
logger = logging.getLogger(__name__)


class SupervisedConfig(BaseModel):

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(100, ge=1)
    batch_size: int = Field(256, ge=1)
    learning_rate: float = Field(0.01, gt=0.0)
    optimizer: Literal["adam", "sgd"] = "sgd"
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(0.0, ge=0.0)
    shuffle_period: int = Field(0, ge=0)
    network: NetworkConfig = Field(default_factory=NetworkConfig)

    def create_optimizer(self, net: Network) -> OptState:
        return OptState.create(
            net,
            kind=self.optimizer,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            momentum=self.momentum
        )


@dataclass
class SupervisedState:

    online: Network
    opt: OptState
    grad_steps: int = 0


def steps_per_epoch(n_samples: int, batch_size: int) -> int:
    return int(math.ceil(n_samples / batch_size))


def accuracy(net: Network, task: SupervisedTask) -> float:
    return float(np.mean(predict(net, task.inputs).argmax(axis=1) == task.labels))


def _epoch_row(ctx: HookContext, epoch: int, value: float, losses) -> MetricRow:
    return MetricRow(
        step_env=epoch,
        step_grad=ctx.step_grad,
        episode=epoch,
        episode_return=value,
        loss=float(np.mean(losses)) if losses else float("nan"),
        dormant_frac_tau0=ctx.fraction(0.0),
        dormant_frac_tau=ctx.fraction(ctx.report_tau),
        recycled_count=ctx.recycled_since_row,
        seed=ctx.seed
    )


def _minibatch_epoch(
    state: SupervisedState,
    inputs: np.ndarray,
    targets: np.ndarray,
    loss_kind: str,
    batch_size: int,
    rng: np.random.Generator,
    hooks: Sequence[TrainingHook],
    ctx: HookContext
) -> list:

    order = rng.permutation(inputs.shape[0])
    losses = []
    for start in range(0, inputs.shape[0], batch_size):
        idx = order[start:start + batch_size]
        out, _ = forward(state.online, inputs[idx])
        loss, grad = loss_and_grad(loss_kind, out, targets[idx])
        opt_step(state.online, backward(state.online, inputs[idx], grad), state.opt)
        state.grad_steps += 1
        grad_steps_counter.inc()
        losses.append(loss)
        ctx.step_grad = state.grad_steps
        run_hooks(hooks, ctx)
    return losses


def run_supervised(
    task: SupervisedTask,
    config: SupervisedConfig,
    hooks: Sequence[TrainingHook] = (),
    seed: int = 0,
    report_tau: float = 0.1
) -> MetricSeries:
    """Train a classifier; with ``shuffle_period`` > 0 labels are permuted every that many epochs."""
    specs = config.network.layer_specs(task.inputs.shape[1], task.n_classes)
    net = build_network(specs, derive_seed(seed, "init"))
    state = SupervisedState(online=net, opt=config.create_optimizer(net))
    rng = make_rng(seed, "minibatch")
    series = MetricSeries(seed=seed)
    inputs = task.inputs
    ctx = HookContext(
        agent=state,
        series=series,
        seed=seed,
        sample_states=lambda size, r: inputs[r.integers(0, inputs.shape[0], size=size)],
        report_tau=report_tau
    )

    logger.info(
        f"Supervised run seed={seed} n={task.size} epochs={config.epochs} "
        f"shuffle_period={config.shuffle_period}"
    )
    for epoch in range(config.epochs):
        if config.shuffle_period and epoch > 0 and epoch % config.shuffle_period == 0:
            task = shuffle_labels(task, derive_seed(seed, "labels", epoch))
            logger.debug(f"Labels shuffled at epoch {epoch} (label_epoch={task.label_epoch})")
        ctx.step_env = epoch + 1

        losses = _minibatch_epoch(state, inputs, task.labels, "cross_entropy", config.batch_size, rng, hooks, ctx)
        train_acc = accuracy(state.online, task)
        series.rows.append(_epoch_row(ctx, epoch + 1, train_acc, losses))
        series.probes.append(ProbeRow(ctx.step_grad, "label_epoch", float(task.label_epoch)))
        series.probes.append(ProbeRow(ctx.step_grad, "train_accuracy", train_acc))
        ctx.recycled_since_row = 0
        if ctx.stop:
            break

    finish_hooks(hooks, ctx)
    series.final_network = state.online
    series.counters = {"env_steps": 0, "grad_steps": state.grad_steps, "episodes": config.epochs}
    return series


def run_regression(
    task: RegressionTask,
    config: SupervisedConfig,
    hooks: Sequence[TrainingHook] = (),
    seed: int = 0,
    report_tau: float = 0.1,
    network: Optional[Network] = None
) -> MetricSeries:
    """Fit frozen teacher targets with MSE, from ``network`` or a fresh init."""
    out_dim = task.targets.shape[1]
    if network is None:
        specs = config.network.layer_specs(task.inputs.shape[1], out_dim)
        network = build_network(specs, derive_seed(seed, "init"))
    elif network.input_dim != task.inputs.shape[1] or network.output_dim != out_dim:
        raise ShapeError(
            f"Student maps {network.input_dim}->{network.output_dim}, "
            f"task needs {task.inputs.shape[1]}->{out_dim}"
        )
    net = copy_network(network)
    state = SupervisedState(online=net, opt=config.create_optimizer(net))
    rng = make_rng(seed, "minibatch")
    series = MetricSeries(seed=seed)
    inputs = task.inputs
    ctx = HookContext(
        agent=state,
        series=series,
        seed=seed,
        sample_states=lambda size, r: inputs[r.integers(0, inputs.shape[0], size=size)],
        report_tau=report_tau
    )

    for epoch in range(config.epochs):
        ctx.step_env = epoch + 1
        losses = _minibatch_epoch(state, inputs, task.targets, "mse", config.batch_size, rng, hooks, ctx)
        series.rows.append(_epoch_row(ctx, epoch + 1, float("nan"), losses))
        ctx.recycled_since_row = 0
        if ctx.stop:
            break

    final_loss, _ = loss_and_grad("mse", predict(state.online, inputs), task.targets)
    series.probes.append(ProbeRow(ctx.step_grad, "final_loss", final_loss))
    finish_hooks(hooks, ctx)
    series.final_network = state.online
    series.counters = {"env_steps": 0, "grad_steps": state.grad_steps, "episodes": config.epochs}
    logger.info(f"Regression ({task.mode}) seed={seed} final loss {final_loss:.6f}")
    return series
