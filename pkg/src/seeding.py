"""Deterministic seed derivation.

Every random stream in a run is derived from the run seed plus a tuple of
integer keys, so independent consumers (environment episodes, exploration,
replay sampling, measurement hooks) never share a generator.
"""
from typing import Union

import zlib

import numpy as np

_SEED_MASK = (1 << 64) - 1

Key = Union[int, str]


def _entropy(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & _SEED_MASK


def derive_seed(seed: int, *keys: Key) -> int:
    sequence = np.random.SeedSequence([_entropy(seed), *(_entropy(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))
