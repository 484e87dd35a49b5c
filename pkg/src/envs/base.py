from typing import Literal, Tuple, Union

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.envs.cartpole import CartPoleState, cartpole_reset, cartpole_step
from src.envs.catch import CatchState, catch_all_observations, catch_observation, catch_reset, catch_step
from src.envs import cartpole, catch
from src.exceptions import ConfigError
logger = logging.getLogger(__name__)

EnvState = Union[CatchState, CartPoleState]


class EnvSpec(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["catch", "cartpole"] = "catch"
    rows: int = Field(10, ge=2)
    cols: int = Field(5, ge=2)
    episode_cap: int = Field(200, ge=1)

    @property
    def n_actions(self) -> int:
        return catch.N_ACTIONS if self.kind == "catch" else cartpole.N_ACTIONS

    @property
    def obs_dim(self) -> int:
        return self.rows * self.cols if self.kind == "catch" else 4


def observe(state: EnvState) -> np.ndarray:

    if isinstance(state, CatchState):
        return catch_observation(state)
    return state.vector()


def env_reset(spec: EnvSpec, seed: int) -> Tuple[EnvState, np.ndarray]:

    if spec.kind == "catch":
        state = catch_reset(spec.rows, spec.cols, seed)
    elif spec.kind == "cartpole":
        state = cartpole_reset(spec.episode_cap, seed)
    else:
        raise ConfigError(f"Unknown environment kind: {spec.kind}")
    return state, observe(state)


def env_step(state: EnvState, action: int) -> Tuple[EnvState, float, bool]:

    if isinstance(state, CatchState):
        return catch_step(state, int(action))
    return cartpole_step(state, int(action))


def all_observations(spec: EnvSpec) -> np.ndarray:
    """Exhaustive observation set; only defined for Catch."""
    if spec.kind != "catch":
        raise ConfigError("Exhaustive observation enumeration only exists for catch")
    return catch_all_observations(spec.rows, spec.cols)


class Environment:
    """Single-owner stateful wrapper used by training and evaluation loops."""

    def __init__(self, spec: EnvSpec):

        self.spec = spec
        self.state: EnvState = None
        self.episode_return = 0.0

    @property
    def n_actions(self) -> int:
        return self.spec.n_actions

    @property
    def obs_dim(self) -> int:
        return self.spec.obs_dim

    def reset(self, seed: int) -> np.ndarray:

        self.state, obs = env_reset(self.spec, seed)
        self.episode_return = 0.0
        return obs

    def step(self, action: int) -> Tuple[np.ndarray, float, bool]:

        self.state, reward, done = env_step(self.state, action)
        self.episode_return += reward
        return observe(self.state), reward, done
