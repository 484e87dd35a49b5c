from typing import List

import logging

from src.agent.dqn import epsilon_greedy
from src.envs.base import EnvSpec, Environment
from src.nn.network import Network, predict
from src.seeding import derive_seed, make_rng
logger = logging.getLogger(__name__)


def evaluate_policy(
    net: Network,
    spec: EnvSpec,
    episodes: int,
    seed: int,
    epsilon: float = 0.0
) -> List[float]:
    """Episodic returns of the ε-greedy policy over ``net`` (greedy at ε=0).

    Episode ``e`` always starts from ``derive_seed(seed, "eval", e)`` so two
    networks evaluated with the same seed face the same starts.
    """
    env = Environment(spec)
    rng = make_rng(seed, "eval-explore")
    returns = []
    for e in range(episodes):
        obs = env.reset(derive_seed(seed, "eval", e))
        done = False
        while not done:
            action = epsilon_greedy(predict(net, obs[None, :])[0], epsilon, rng)
            obs, _, done = env.step(action)
        returns.append(env.episode_return)
    return returns
