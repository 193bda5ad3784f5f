"""Reproducible random substreams for the Monte Carlo estimators."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
# second key word fixed so that different master seeds never collide by xor
_KEY_SALT = 0x9E3779B97F4A7C15


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator addressed by (master_seed, path).

    Streams are counter based: a Philox generator is keyed by the master
    seed and its 256-bit counter is preloaded from up to three path
    indices.  Any (seed, path) pair therefore yields the same stream no
    matter in which order, or on which thread, it is created.  Streams
    with different paths are separated by 2**64 draws and never overlap
    at practical budgets.
    """
    if len(path) > 3:
        raise ValueError("substream path supports at most 3 indices")
    counter = np.zeros(4, dtype=np.uint64)
    for i, part in enumerate(path):
        counter[i + 1] = np.uint64(int(part) & _MASK64)
    key = np.array([int(master_seed) & _MASK64, _KEY_SALT], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))
