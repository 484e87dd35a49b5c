"""Measurement and intervention hooks wired into the training loops.

Each hook draws from ``make_rng(run_seed, <hook name>, step_grad)`` so its
randomness never touches the training streams.
"""
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import logging
import sys
import time

import numpy as np

from src.agent.evaluation import evaluate_policy
from src.agent.hooks import HookContext, TrainingHook
from src.agent.records import DormancyRow, ProbeRow
from src.dormancy.overlap import OverlapTracker
from src.dormancy.pruning import prune_dormant
from src.dormancy.scores import dormancy_report, dormant_fraction, neuron_scores
from src.envs.base import all_observations
from src.metrics.rank import effective_rank
from src.nn.network import forward, penultimate_features, predict
from src.recycle.redo import RecycleEvent, RecycleStrategy, recycle_neurons, redo_step
from src.recycle.reset import reset_last_layers
from src.recycle.selection import RecycleSchedule, SelectionStrategy, select_for_recycling
from src.seeding import derive_seed, make_rng
logger = logging.getLogger(__name__)


def _scoring_batch(ctx: HookContext, name: str, size: int) -> np.ndarray:
    return ctx.sample_states(size, make_rng(ctx.seed, name, ctx.step_grad))


def _record_event(ctx: HookContext, event: RecycleEvent) -> None:

    ctx.series.recycle_events.extend(event.rows())
    ctx.recycled_since_row += event.n_recycled


class DormancyHook(TrainingHook):
    """Scores every hidden neuron and logs one row per (layer, tau)."""

    name = "dormancy"

    def __init__(self, period: int, taus: Sequence[float], batch_size: int):

        super().__init__(period)
        self.taus = sorted(set(float(t) for t in taus))
        self.batch_size = batch_size
        self.trackers: Dict[Tuple[int, float], OverlapTracker] = {}

    def on_grad_step(self, ctx: HookContext) -> None:

        states = _scoring_batch(ctx, self.name, self.batch_size)
        _, trace = forward(ctx.net, states)
        scores = neuron_scores(trace)
        penultimate = len(scores) - 1

        for tau in self.taus:
            report = dormancy_report(trace, tau, batch_id=f"{self.name}@{ctx.step_grad}", scores=scores)
            ctx.latest_fractions[tau] = dormant_fraction(report)
            for layer in report.layers:
                tracker = self.trackers.setdefault((layer.layer, tau), OverlapTracker(layer.layer))
                vs_union, vs_first = tracker.observe(layer.dormant)
                ctx.series.dormancy.append(DormancyRow(
                    step_grad=ctx.step_grad,
                    layer=layer.layer,
                    tau=tau,
                    dormant_count=len(layer.dormant),
                    layer_size=layer.live_count,
                    dormant_fraction=layer.dormant_fraction,
                    overlap=vs_union
                ))
                if layer.layer == penultimate and tau == ctx.report_tau and vs_first is not None:
                    ctx.series.probes.append(ProbeRow(ctx.step_grad, "overlap_first_snapshot", vs_first))

        logger.debug(
            f"step {ctx.step_grad}: dormant fraction (tau={ctx.report_tau}) "
            f"{ctx.fraction(ctx.report_tau):.4f}"
        )


class RedoHook(TrainingHook):
    """Threshold recycling (ReDo) every ``period`` gradient steps."""

    name = "redo"

    def __init__(self, period: int, tau: float, strategy: RecycleStrategy, batch_size: int):

        super().__init__(period)
        self.tau = tau
        self.strategy = strategy
        self.batch_size = batch_size

    def on_grad_step(self, ctx: HookContext) -> None:

        states = _scoring_batch(ctx, self.name, self.batch_size)
        _, trace = forward(ctx.net, states)
        rng = make_rng(ctx.seed, f"{self.name}-init", ctx.step_grad)
        event = redo_step(ctx.net, trace, self.tau, self.strategy, ctx.opt, rng, ctx.step_grad)
        _record_event(ctx, event)


class SelectionRecycleHook(TrainingHook):
    """Recycles a scheduled fraction of neurons chosen by a selection rule."""

    name = "selection"

    def __init__(
        self,
        selection: SelectionStrategy,
        schedule: RecycleSchedule,
        strategy: RecycleStrategy,
        batch_size: int
    ):

        super().__init__(schedule.period)
        self.selection = selection
        self.schedule = schedule
        self.strategy = strategy
        self.batch_size = batch_size

    def on_grad_step(self, ctx: HookContext) -> None:

        fraction = self.schedule.fraction_at(ctx.step_grad, self.selection.fraction)
        selection = self.selection.model_copy(update={"fraction": fraction})
        states = _scoring_batch(ctx, self.name, self.batch_size)
        _, trace = forward(ctx.net, states)
        rng = make_rng(ctx.seed, f"{self.name}-init", ctx.step_grad)
        chosen = select_for_recycling(neuron_scores(trace), selection, rng, ctx.net)
        recycled = recycle_neurons(ctx.net, chosen, self.strategy, ctx.opt, rng)
        _record_event(ctx, RecycleEvent(
            ctx.step_grad, recycled, f"{selection.kind}/{self.strategy.label}", selection.parameter()
        ))


class ResetHook(TrainingHook):

    name = "reset"

    def __init__(self, period: int, k: int):

        super().__init__(period)
        self.k = k

    def on_grad_step(self, ctx: HookContext) -> None:

        reset_last_layers(ctx.net, self.k, ctx.opt, make_rng(ctx.seed, self.name, ctx.step_grad))
        ctx.series.probes.append(ProbeRow(ctx.step_grad, "reset_layers", float(self.k)))


class PruneHook(TrainingHook):
    """Prunes tau-dormant neurons at fixed steps and checks the greedy policy is unchanged.

    On Catch the scoring batch is every reachable observation, so pruning at
    tau=0 cannot change any greedy decision.
    """

    name = "prune"

    def __init__(self, steps: Iterable[int], tau: float, eval_episodes: int, batch_size: int):

        super().__init__(1)
        self.steps = sorted(set(int(s) for s in steps))
        self.tau = tau
        self.eval_episodes = eval_episodes
        self.batch_size = batch_size

    def due(self, step_grad: int) -> bool:
        return step_grad in self.steps

    def _states(self, ctx: HookContext) -> np.ndarray:

        if ctx.env_spec is not None and ctx.env_spec.kind == "catch":
            return all_observations(ctx.env_spec)
        return _scoring_batch(ctx, self.name, self.batch_size)

    def _evaluate(self, ctx: HookContext) -> float:

        if ctx.env_spec is None:
            return float("nan")
        seed = derive_seed(ctx.seed, "prune-eval", ctx.step_grad)
        return float(np.mean(evaluate_policy(ctx.net, ctx.env_spec, self.eval_episodes, seed)))

    def on_grad_step(self, ctx: HookContext) -> None:

        states = self._states(ctx)
        before = self._evaluate(ctx)
        q_before, trace = forward(ctx.net, states)
        report = dormancy_report(trace, self.tau)
        prune_dormant(ctx.net, report.dormant_sets(), ctx.opt)
        q_after = predict(ctx.net, states)
        after = self._evaluate(ctx)

        step = ctx.step_grad
        ctx.series.probes.extend([
            ProbeRow(step, "pruned_count", float(report.dormant_count)),
            ProbeRow(step, "eval_return_before", before),
            ProbeRow(step, "eval_return_after", after),
            ProbeRow(step, "q_max_abs_change", float(np.abs(q_after - q_before).max())),
        ])
        logger.info(
            f"Pruned {report.dormant_count} neurons at step {step}: "
            f"eval return {before:.3f} -> {after:.3f}"
        )


class RankHook(TrainingHook):
    """Effective rank of penultimate features once training finishes."""

    name = "rank"

    def __init__(self, batch_size: int, delta: Optional[float] = None):

        super().__init__(1)
        self.batch_size = batch_size
        self.delta = delta

    def due(self, step_grad: int) -> bool:
        return False

    def on_finish(self, ctx: HookContext) -> None:

        states = ctx.sample_states(self.batch_size, make_rng(ctx.seed, self.name))
        features = penultimate_features(ctx.net, states)
        if not features.any():
            logger.warning("Penultimate features are all zero; effective rank recorded as 0")
            value = 0
        else:
            value = effective_rank(features, self.delta)
        ctx.series.probes.append(ProbeRow(ctx.step_grad, "effective_rank", float(value)))


class DemoProgressHook(TrainingHook):
    """Prints the live dormant fraction and stops the run at a wall-clock deadline."""

    name = "demo"

    def __init__(self, period: int, seconds: float, stream=None):

        super().__init__(period)
        self.deadline = time.monotonic() + seconds
        self.stream = stream or sys.stderr

    def on_grad_step(self, ctx: HookContext) -> None:

        recycled = sum(row.n_recycled for row in ctx.series.recycle_events)
        returns = ctx.series.returns()[-100:]
        mean_return = float(np.mean(returns)) if returns else float("nan")
        print(
            f"step_env={ctx.step_env} step_grad={ctx.step_grad} "
            f"dormant(tau={ctx.report_tau})={ctx.fraction(ctx.report_tau):.3f} "
            f"dormant(tau=0)={ctx.fraction(0.0):.3f} recycled={recycled} return@100={mean_return:.3f}",
            file=self.stream,
            flush=True
        )
        if time.monotonic() >= self.deadline:
            ctx.stop = True
