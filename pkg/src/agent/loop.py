"""Online and offline DQN training loops.

Random streams are derived from the run seed: ``init`` (network), ``replay``
(minibatch sampling), ``explore`` (behaviour policy) and ``("episode", e)``
(environment starts). Hooks derive their own streams, so turning
measurement on or off never changes the training trajectory.
"""
from typing import Optional, Sequence

import logging
import math

import numpy as np

from src.agent.dqn import AgentState, DQNConfig, apply_update, epsilon_greedy, td_targets, train_step
from src.agent.hooks import HookContext, TrainingHook, finish_hooks, run_hooks
from src.agent.records import MetricRow, MetricSeries
from src.agent.replay_buffer import ReplayBuffer
from src.envs.base import EnvSpec, Environment
from src.envs.supervised import RegressionTask
from src.exceptions import ReplayBufferError, ShapeError
from src.nn.network import Network, build_network, copy_network, predict
from src.seeding import derive_seed, make_rng
from src.telemetry import env_steps_counter
logger = logging.getLogger(__name__)


def updates_due(post_warmup_steps: int, replay_ratio: float) -> int:
    """Gradient updates owed after the given post-warm-up env step (1-based)."""
    if replay_ratio >= 1.0:
        return int(math.ceil(replay_ratio))
    every = int(round(1.0 / replay_ratio))
    return 1 if post_warmup_steps % every == 0 else 0


def _mean_loss(losses) -> float:
    return float(np.mean(losses)) if losses else float("nan")


def _metric_row(ctx: HookContext, episode: int, episode_return: float, losses) -> MetricRow:
    return MetricRow(
        step_env=ctx.step_env,
        step_grad=ctx.step_grad,
        episode=episode,
        episode_return=episode_return,
        loss=_mean_loss(losses),
        dormant_frac_tau0=ctx.fraction(0.0),
        dormant_frac_tau=ctx.fraction(ctx.report_tau),
        recycled_count=ctx.recycled_since_row,
        seed=ctx.seed
    )


def _init_agent(
    config: DQNConfig,
    obs_dim: int,
    n_actions: int,
    seed: int,
    buffer: ReplayBuffer,
    network: Optional[Network]
) -> AgentState:

    if network is None:
        online = build_network(config.network.layer_specs(obs_dim, n_actions), derive_seed(seed, "init"))
    else:
        if network.input_dim != obs_dim or network.output_dim != n_actions:
            raise ShapeError(
                f"Initial network maps {network.input_dim}->{network.output_dim}, "
                f"environment needs {obs_dim}->{n_actions}"
            )
        online = copy_network(network)
    return AgentState(
        online=online,
        target=copy_network(online),
        opt=config.create_optimizer(online),
        buffer=buffer,
        rng=make_rng(seed, "replay")
    )


def run_training(
    env_spec: EnvSpec,
    config: DQNConfig,
    hooks: Sequence[TrainingHook] = (),
    seed: int = 0,
    report_tau: float = 0.1,
    network: Optional[Network] = None
) -> MetricSeries:
    """Interleave environment steps and gradient steps at the configured replay ratio.

    The first ``min_history`` steps follow a uniformly random policy; updates
    begin once the buffer holds ``min_history`` transitions.
    """
    env = Environment(env_spec)
    buffer = ReplayBuffer(config.buffer_capacity, env_spec.obs_dim, config.n_step, config.gamma)
    state = _init_agent(config, env_spec.obs_dim, env_spec.n_actions, seed, buffer, network)
    explore_rng = make_rng(seed, "explore")
    series = MetricSeries(seed=seed)
    ctx = HookContext(
        agent=state,
        series=series,
        seed=seed,
        sample_states=buffer.sample_states,
        report_tau=report_tau,
        env_spec=env_spec
    )

    logger.info(
        f"Training DQN on {env_spec.kind} seed={seed} rr={config.replay_ratio} "
        f"steps={config.total_env_steps} target_period={config.resolved_target_period}"
    )
    episode = 0
    post_warmup = 0
    losses = []
    obs = env.reset(derive_seed(seed, "episode", episode))

    for _ in range(config.total_env_steps):
        if state.env_steps < config.min_history:
            action = int(explore_rng.integers(env_spec.n_actions))
        else:
            action = epsilon_greedy(predict(state.online, obs[None, :])[0], config.epsilon_train, explore_rng)

        next_obs, reward, done = env.step(action)
        buffer.add(obs, action, reward, next_obs, done, episode)
        state.env_steps += 1
        ctx.step_env = state.env_steps
        env_steps_counter.inc()

        if len(buffer) >= config.min_history:
            post_warmup += 1
            for _ in range(updates_due(post_warmup, config.replay_ratio)):
                loss, state = train_step(state, config)
                losses.append(loss)
                ctx.step_grad = state.grad_steps
                run_hooks(hooks, ctx)

        if done:
            series.rows.append(_metric_row(ctx, episode, env.episode_return, losses))
            losses = []
            ctx.recycled_since_row = 0
            episode += 1
            obs = env.reset(derive_seed(seed, "episode", episode))
        else:
            obs = next_obs

        if ctx.stop:
            logger.info(f"Training stopped early at env step {state.env_steps}")
            break

    finish_hooks(hooks, ctx)
    series.final_network = state.online
    series.counters = {"env_steps": state.env_steps, "grad_steps": state.grad_steps, "episodes": episode}
    logger.info(
        f"Finished seed={seed}: {episode} episodes, {state.env_steps} env steps, "
        f"{state.grad_steps} grad steps"
    )
    return series


def collect_random_buffer(
    env_spec: EnvSpec,
    size: int,
    config: DQNConfig,
    seed: int
) -> ReplayBuffer:
    """Fill a buffer with ``size`` uniformly random transitions, then freeze it."""
    if size < 1:
        raise ReplayBufferError(f"Offline dataset size must be >= 1, got {size}")

    env = Environment(env_spec)
    buffer = ReplayBuffer(size, env_spec.obs_dim, config.n_step, config.gamma)
    rng = make_rng(seed, "behaviour")
    episode = 0
    obs = env.reset(derive_seed(seed, "behaviour-episode", episode))
    for _ in range(size):
        action = int(rng.integers(env_spec.n_actions))
        next_obs, reward, done = env.step(action)
        buffer.add(obs, action, reward, next_obs, done, episode)
        if done:
            episode += 1
            obs = env.reset(derive_seed(seed, "behaviour-episode", episode))
        else:
            obs = next_obs

    logger.info(f"Collected {size} random transitions over {episode} finished episodes")
    return buffer.freeze()


def run_offline(
    frozen_buffer: ReplayBuffer,
    config: DQNConfig,
    n_actions: int,
    grad_steps: int,
    hooks: Sequence[TrainingHook] = (),
    seed: int = 0,
    report_tau: float = 0.1,
    fixed_targets: Optional[RegressionTask] = None,
    network: Optional[Network] = None
) -> MetricSeries:
    """Gradient steps on a fixed dataset; no environment interaction.

    With ``fixed_targets`` (one row per buffer slot, one column per action)
    the TD target is replaced by the frozen regression target.
    """
    if len(frozen_buffer) == 0:
        raise ReplayBufferError("Offline training needs a non-empty buffer")
    frozen_buffer.freeze()
    if fixed_targets is not None and fixed_targets.targets.shape != (len(frozen_buffer), n_actions):
        raise ShapeError(
            f"Fixed targets shape {fixed_targets.targets.shape} must be ({len(frozen_buffer)}, {n_actions})"
        )

    state = _init_agent(config, frozen_buffer.obs_dim, n_actions, seed, frozen_buffer, network)
    series = MetricSeries(seed=seed)
    ctx = HookContext(
        agent=state,
        series=series,
        seed=seed,
        sample_states=frozen_buffer.sample_states,
        report_tau=report_tau
    )

    mode = "fixed-random-target" if fixed_targets is not None else "td"
    logger.info(f"Offline training ({mode}) seed={seed} for {grad_steps} grad steps")
    losses = []
    for _ in range(grad_steps):
        if fixed_targets is None:
            batch = frozen_buffer.sample(config.batch_size, state.rng)
            targets = td_targets(batch, state.target, config.gamma, frozen_buffer.n_step)
            states, actions = batch.states, batch.actions
        else:
            idx = frozen_buffer.sample_indices(config.batch_size, state.rng)
            states = fixed_targets.inputs[idx]
            actions = frozen_buffer.actions_at(idx)
            targets = fixed_targets.targets[idx, actions]

        losses.append(apply_update(state, config, states, actions, targets))
        ctx.step_grad = state.grad_steps
        run_hooks(hooks, ctx)

        if state.grad_steps % config.log_period == 0 or state.grad_steps == grad_steps:
            series.rows.append(_metric_row(ctx, 0, float("nan"), losses))
            losses = []
            ctx.recycled_since_row = 0
        if ctx.stop:
            break

    finish_hooks(hooks, ctx)
    series.final_network = state.online
    series.counters = {"env_steps": 0, "grad_steps": state.grad_steps, "episodes": 0}
    return series

