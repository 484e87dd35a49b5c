"""DQN core: configuration, exploration, n-step targets and the gradient step."""
from typing import List, Literal, Optional, Tuple

from dataclasses import dataclass
import logging
import time

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.agent.replay_buffer import NStepBatch, ReplayBuffer
from src.exceptions import ConfigError, NonFiniteError, ReplayBufferError, ShapeError
from src.nn.losses import loss_and_grad
from src.nn.network import ActivationKind, Gradients, LayerSpec, Network, backward, copy_network, dense_specs, forward, predict
from src.nn.optim import OptState, opt_step
from src.telemetry import grad_steps_counter, train_step_duration
logger = logging.getLogger(__name__)

SUPPORTED_REPLAY_RATIOS = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


class NetworkConfig(BaseModel):

    model_config = ConfigDict(extra="forbid")

    hidden: List[int] = Field(default_factory=lambda: [64, 64])
    activation: ActivationKind = "relu"
    slope: float = Field(0.01, ge=0.0)
    width_multiplier: int = Field(1, ge=1)
    output_gain: float = Field(1.0, ge=0.0)

    def layer_specs(self, in_dim: int, out_dim: int) -> List[LayerSpec]:

        if not self.hidden:
            raise ConfigError("network.hidden needs at least one hidden layer")
        hidden = [h * self.width_multiplier for h in self.hidden]
        return dense_specs(in_dim, hidden, out_dim, self.activation, self.slope, self.output_gain)


class DQNConfig(BaseModel):

    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(0.99, ge=0.0, lt=1.0)
    epsilon_train: float = Field(0.01, ge=0.0, le=1.0)
    epsilon_eval: float = Field(0.001, ge=0.0, le=1.0)
    replay_ratio: float = 0.25
    target_update_period: Optional[int] = Field(None, ge=1)
    target_update_base: int = Field(2000, ge=1)
    batch_size: int = Field(32, ge=1)
    n_step: int = Field(1, ge=1)
    min_history: int = Field(1000, ge=1)
    total_env_steps: int = Field(100_000, ge=0)
    buffer_capacity: int = Field(100_000, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    optimizer: Literal["adam", "sgd"] = "adam"
    adam_eps: float = Field(1.5e-4, gt=0.0)
    momentum: float = Field(0.0, ge=0.0, lt=1.0)
    weight_decay: float = Field(0.0, ge=0.0)
    huber_delta: float = Field(1.0, gt=0.0)
    log_period: int = Field(1000, ge=1)
    network: NetworkConfig = Field(default_factory=NetworkConfig)

    @model_validator(mode="after")
    def _check(self) -> "DQNConfig":

        if float(self.replay_ratio) not in SUPPORTED_REPLAY_RATIOS:
            raise ValueError(
                f"replay_ratio must be one of {SUPPORTED_REPLAY_RATIOS}, got {self.replay_ratio}"
            )
        if self.batch_size > self.min_history:
            raise ValueError(
                f"batch_size ({self.batch_size}) must not exceed min_history ({self.min_history})"
            )
        # A buffer smaller than min_history never fills far enough to start updates
        if self.buffer_capacity < self.min_history:
            raise ValueError(
                f"buffer_capacity ({self.buffer_capacity}) must be at least min_history ({self.min_history})"
            )
        return self

    @property
    def resolved_target_period(self) -> int:
        """Explicit period, else ``target_update_base / replay_ratio`` gradient steps."""
        if self.target_update_period is not None:
            return self.target_update_period
        return max(1, int(round(self.target_update_base / self.replay_ratio)))

    def create_optimizer(self, net: Network) -> OptState:
        return OptState.create(
            net,
            kind=self.optimizer,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            momentum=self.momentum,
            eps=self.adam_eps
        )


@dataclass
class AgentState:

    online: Network
    target: Network
    opt: OptState
    buffer: ReplayBuffer
    rng: np.random.Generator
    env_steps: int = 0
    grad_steps: int = 0


def epsilon_greedy(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Greedy action with probability ``1 - epsilon``; ties go to the lowest index.

    Exactly one uniform draw is consumed per call, plus one integer draw when
    exploring.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] == 0:
        raise ValueError("epsilon_greedy needs a non-empty 1-D value vector")
    if not np.isfinite(q).all():
        raise NonFiniteError("Q-values contain non-finite entries")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")

    if rng.random() < epsilon:
        return int(rng.integers(q.shape[0]))
    return int(np.argmax(q))


def td_targets(
    batch: NStepBatch,
    target_net: Network,
    gamma: float,
    n: int
) -> np.ndarray:
    """n-step bootstrap targets with no bootstrap past a terminal transition."""
    if batch.rewards.shape[1] != n:
        raise ShapeError(f"Batch was assembled with n={batch.rewards.shape[1]}, expected {n}")
    if batch.bootstrap_states.shape[1] != target_net.input_dim:
        raise ShapeError(
            f"State dim {batch.bootstrap_states.shape[1]} does not match target input dim "
            f"{target_net.input_dim}"
        )

    discounts = gamma ** np.arange(n, dtype=np.float64)
    returns = batch.rewards @ discounts
    q_next = predict(target_net, batch.bootstrap_states).max(axis=1)
    bootstrap = np.where(batch.terminal, 0.0, (gamma ** batch.lengths) * q_next)
    return returns + bootstrap


def td_loss_and_grads(
    online: Network,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    huber_delta: float = 1.0
) -> Tuple[float, Gradients]:
    """Huber loss between ``Q_online(s, a)`` and fixed ``targets``."""
    q, _ = forward(online, states)
    rows = np.arange(q.shape[0])
    loss, grad_sa = loss_and_grad("huber", q[rows, actions][:, None], targets[:, None], huber_delta)

    loss_grad = np.zeros_like(q)
    loss_grad[rows, actions] = grad_sa[:, 0]
    return loss, backward(online, states, loss_grad)


def apply_update(
    state: AgentState,
    config: DQNConfig,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray
) -> float:
    """One optimizer step on the online net plus the periodic target copy."""
    started = time.perf_counter()
    loss, grads = td_loss_and_grads(state.online, states, actions, targets, config.huber_delta)
    opt_step(state.online, grads, state.opt)
    state.grad_steps += 1
    grad_steps_counter.inc()

    if state.grad_steps % config.resolved_target_period == 0:
        state.target = copy_network(state.online)
        logger.debug(f"Target network synced at grad step {state.grad_steps}")
    train_step_duration.observe(time.perf_counter() - started)
    return loss


def train_step(state: AgentState, config: DQNConfig) -> Tuple[float, AgentState]:

    if len(state.buffer) < config.min_history:
        raise ReplayBufferError(
            f"Replay buffer holds {len(state.buffer)} transitions, need {config.min_history}"
        )
    batch = state.buffer.sample(config.batch_size, state.rng)
    targets = td_targets(batch, state.target, config.gamma, state.buffer.n_step)
    loss = apply_update(state, config, batch.states, batch.actions, targets)
    return loss, state
