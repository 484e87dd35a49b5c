from dataclasses import dataclass
import logging

import numpy as np

from src.exceptions import ReplayBufferError, ShapeError
logger = logging.getLogger(__name__)


@dataclass
class NStepBatch:
    """Sampled n-step windows.

    ``rewards[:, k]`` is zero for ``k >= lengths``. ``terminal`` marks windows
    that reached the end of their episode; ``bootstrap_states`` holds the
    observation after the last transition used.
    """

    indices: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    lengths: np.ndarray
    terminal: np.ndarray
    bootstrap_states: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])


class ReplayBuffer:

    def __init__(
        self,
        capacity: int,
        obs_dim: int,
        n_step: int = 1,
        gamma: float = 0.99
    ):

        if capacity < 1 or n_step < 1:
            raise ValueError(f"Invalid replay buffer capacity={capacity} n_step={n_step}")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.n_step = n_step
        self.gamma = gamma
        self.frozen = False

        self._states = np.zeros((capacity, obs_dim), dtype=np.float64)
        self._next_states = np.zeros((capacity, obs_dim), dtype=np.float64)
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity, dtype=np.float64)
        self._dones = np.zeros(capacity, dtype=bool)
        self._episodes = np.zeros(capacity, dtype=np.int64)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(
        self,
        state: np.ndarray,
        action: int,
        reward: float,
        next_state: np.ndarray,
        done: bool,
        episode: int
    ) -> None:

        if self.frozen:
            raise ReplayBufferError("Cannot append to a frozen replay buffer")
        if state.shape != (self.obs_dim,) or next_state.shape != (self.obs_dim,):
            raise ShapeError(f"Observation shape must be ({self.obs_dim},)")

        i = self._next
        self._states[i] = state
        self._next_states[i] = next_state
        self._actions[i] = action
        self._rewards[i] = reward
        self._dones[i] = done
        self._episodes[i] = episode
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def freeze(self) -> "ReplayBuffer":
        self.frozen = True
        return self

    def states(self) -> np.ndarray:
        """Stored observations in slot order (slot ``i`` is row ``i``)."""
        return self._states[:self._size].copy()

    def _age(self, slots: np.ndarray) -> np.ndarray:
        # 0 = oldest stored transition
        if self._size < self.capacity:
            return slots
        return (slots - self._next) % self.capacity

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:

        if self._size == 0:
            raise ReplayBufferError("Cannot sample from an empty replay buffer")
        return rng.integers(0, self._size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> NStepBatch:
        return self.assemble(self.sample_indices(batch_size, rng))

    def actions_at(self, indices: np.ndarray) -> np.ndarray:
        return self._actions[np.asarray(indices, dtype=np.int64)]

    def sample_states(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return self._states[self.sample_indices(batch_size, rng)]

    def assemble(self, indices: np.ndarray) -> NStepBatch:
        """Build n-step windows from consecutive same-episode transitions."""
        indices = np.asarray(indices, dtype=np.int64)
        count = indices.shape[0]
        start_age = self._age(indices)
        episode = self._episodes[indices]

        rewards = np.zeros((count, self.n_step), dtype=np.float64)
        lengths = np.zeros(count, dtype=np.int64)
        terminal = np.zeros(count, dtype=bool)
        last = indices.copy()
        alive = np.ones(count, dtype=bool)

        for k in range(self.n_step):
            slots = (indices + k) % self.capacity
            valid = alive & (start_age + k < self._size) & (self._episodes[slots] == episode)
            rewards[:, k] = np.where(valid, self._rewards[slots], 0.0)
            lengths += valid
            last = np.where(valid, slots, last)
            ended = valid & self._dones[slots]
            terminal |= ended
            alive = valid & ~self._dones[slots]

        return NStepBatch(
            indices=indices,
            states=self._states[indices],
            actions=self._actions[indices],
            rewards=rewards,
            lengths=lengths,
            terminal=terminal,
            bootstrap_states=self._next_states[last]
        )
