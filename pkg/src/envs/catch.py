from dataclasses import dataclass, replace
import logging

import numpy as np

from src.exceptions import EpisodeDoneError
logger = logging.getLogger(__name__)

LEFT, STAY, RIGHT = 0, 1, 2
N_ACTIONS = 3


@dataclass(frozen=True)
class CatchState:

    rows: int
    cols: int
    pellet_row: int
    pellet_col: int
    paddle_col: int
    steps: int = 0
    done: bool = False


def catch_reset(rows: int, cols: int, seed: int) -> CatchState:

    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    return CatchState(
        rows=rows,
        cols=cols,
        pellet_row=0,
        pellet_col=int(rng.integers(cols)),
        paddle_col=cols // 2
    )


def catch_observation(state: CatchState) -> np.ndarray:
    """Flattened ``rows x cols`` binary grid: pellet cell and paddle cell set to 1."""
    grid = np.zeros((state.rows, state.cols), dtype=np.float64)
    grid[state.pellet_row, state.pellet_col] = 1.0
    grid[state.rows - 1, state.paddle_col] = 1.0
    return grid.reshape(-1)


def catch_step(state: CatchState, action: int):

    if state.done:
        raise EpisodeDoneError("Catch episode already finished")
    if action not in (LEFT, STAY, RIGHT):
        raise ValueError(f"Invalid Catch action: {action}")

    paddle = min(max(state.paddle_col + action - 1, 0), state.cols - 1)
    pellet_row = state.pellet_row + 1
    done = pellet_row == state.rows - 1
    reward = 0.0
    if done:
        reward = 1.0 if paddle == state.pellet_col else -1.0

    next_state = replace(
        state,
        pellet_row=pellet_row,
        paddle_col=paddle,
        steps=state.steps + 1,
        done=done
    )
    return next_state, reward, done


def catch_all_observations(rows: int, cols: int) -> np.ndarray:
    """Every pellet position x paddle position, one observation per row."""
    observations = []
    for pellet_row in range(rows):
        for pellet_col in range(cols):
            for paddle_col in range(cols):
                state = CatchState(rows, cols, pellet_row, pellet_col, paddle_col)
                observations.append(catch_observation(state))
    return np.stack(observations)
