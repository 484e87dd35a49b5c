"""
Pytest configuration and shared fixtures for all tests
"""
import copy
from pathlib import Path

import numpy as np
import pytest
from dotenv import load_dotenv

from src.agent.dqn import DQNConfig
from src.envs.base import EnvSpec
from src.nn.network import build_network, dense_specs

# Load environment variables from .env file
load_dotenv()

# Toy budgets: every run finishes in well under a second
TOY_DQN = {
    "min_history": 64,
    "total_env_steps": 400,
    "batch_size": 16,
    "buffer_capacity": 1000,
    "target_update_period": 50,
    "log_period": 20,
    "network": {"hidden": [16, 16]},
}

TOY_EXPERIMENT = {
    "dqn": TOY_DQN,
    "supervised": {"epochs": 4, "batch_size": 64, "network": {"hidden": [16, 16]}},
    "task": {"n": 200, "d": 8, "n_classes": 4},
    "offline": {"dataset_size": 300, "grad_steps": 60},
    "recycle": {"schedule": {"period": 20}},
    "reset": {"period": 40},
    "prune": {"eval_episodes": 5},
    "distill": {"n_inputs": 200},
    "sweep": {
        "replay_ratios": [0.25, 1.0],
        "widths": [1, 2],
        "grad_budget": 40,
    },
    "measure_period": 20,
    "scoring_batch_size": 32,
    "rank_batch_size": 64,
    "seeds": [0, 1],
}

_SUITES = ("core", "production", "integration")


def pytest_collection_modifyitems(config, items):
    """Mark every test with the suite directory it lives in"""
    for item in items:
        parts = Path(str(item.fspath)).parts
        for suite in _SUITES:
            if suite in parts:
                item.add_marker(getattr(pytest.mark, suite))


def toy_experiment(recipe: str, **updates) -> dict:
    """Experiment mapping at toy budgets; top-level keys in ``updates`` replace the defaults"""
    data = copy.deepcopy(TOY_EXPERIMENT)
    data["recipe"] = recipe
    data.update(copy.deepcopy(updates))
    return data


@pytest.fixture
def catch_spec():
    """Default 10x5 Catch"""
    return EnvSpec()


@pytest.fixture
def toy_dqn_config():
    """DQN configuration at toy budgets"""
    return DQNConfig.model_validate(copy.deepcopy(TOY_DQN))


@pytest.fixture
def rng():
    """Fixed-seed generator"""
    return np.random.default_rng(1234)


@pytest.fixture
def small_net():
    """8 -> 16 -> 16 -> 3 ReLU network"""
    return build_network(dense_specs(8, [16, 16], 3), seed=7)


@pytest.fixture
def sample_batch(rng):
    """32 standard-normal inputs for ``small_net``"""
    return rng.standard_normal((32, 8))
