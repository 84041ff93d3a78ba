"""
Seed derivation.

Every random draw of a training run comes from a counter-based ``Philox`` generator
keyed by ``(master seed, stream, indices...)``, so a draw does not depend on the
order in which rollouts are scheduled.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    DIRECTIONS = 0
    ROLLOUT = 1
    EVALUATION = 2
    POPULATION = 3


def derive_rng(master: int, stream: Stream, *indices: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master, spawn_key=(int(stream), *indices))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(master: int, stream: Stream, *indices: int) -> int:
    """
    A reset seed for episode ``indices`` of ``stream``.
    """
    seq = np.random.SeedSequence(master, spawn_key=(int(stream), *indices))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


__all__ = ["Stream", "derive_rng", "derive_seed"]
