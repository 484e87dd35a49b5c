"""Classic cart-pole balancing task.

Constants are the standard classic-control values and must not change:
gravity 9.8, cart mass 1.0, pole mass 0.1, pole half-length 0.5,
force magnitude 10.0, time step 0.02, failure at |theta| > 12 degrees or
|x| > 2.4.
"""
from typing import Tuple

from dataclasses import dataclass
import logging
import math

import numpy as np

from src.exceptions import EpisodeDoneError
logger = logging.getLogger(__name__)

GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
HALF_LENGTH = 0.5
POLE_MASS_LENGTH = MASS_POLE * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
THETA_LIMIT = 12 * 2 * math.pi / 360
X_LIMIT = 2.4

PUSH_LEFT, PUSH_RIGHT = 0, 1
N_ACTIONS = 2


@dataclass(frozen=True)
class CartPoleState:

    x: float
    x_dot: float
    theta: float
    theta_dot: float
    episode_cap: int = 200
    steps: int = 0
    done: bool = False

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot], dtype=np.float64)


def cartpole_dynamics(
    x: float,
    x_dot: float,
    theta: float,
    theta_dot: float,
    force: float
) -> Tuple[float, float, float, float]:
    """One semi-implicit Euler step: velocities first, then positions."""
    cos_theta = math.cos(theta)
    sin_theta = math.sin(theta)
    temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_theta) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_theta - cos_theta * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_theta * cos_theta / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS

    x_dot = x_dot + TAU * x_acc
    x = x + TAU * x_dot
    theta_dot = theta_dot + TAU * theta_acc
    theta = theta + TAU * theta_dot
    return x, x_dot, theta, theta_dot


def cartpole_reset(episode_cap: int, seed: int) -> CartPoleState:

    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    x, x_dot, theta, theta_dot = (float(v) for v in rng.uniform(-0.05, 0.05, size=4))
    return CartPoleState(x, x_dot, theta, theta_dot, episode_cap=episode_cap)


def cartpole_step(state: CartPoleState, action: int):

    if state.done:
        raise EpisodeDoneError("CartPole episode already finished")
    if action not in (PUSH_LEFT, PUSH_RIGHT):
        raise ValueError(f"Invalid CartPole action: {action}")

    force = FORCE_MAG if action == PUSH_RIGHT else -FORCE_MAG
    x, x_dot, theta, theta_dot = cartpole_dynamics(
        state.x, state.x_dot, state.theta, state.theta_dot, force
    )
    steps = state.steps + 1
    done = (
        abs(theta) > THETA_LIMIT
        or abs(x) > X_LIMIT
        or steps >= state.episode_cap
    )
    next_state = CartPoleState(x, x_dot, theta, theta_dot, state.episode_cap, steps, done)
    return next_state, 1.0, done
