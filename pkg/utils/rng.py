"""
Seeded random streams

This module derives every random stream of the pipeline from numpy's PCG64
bit generator. A stream is keyed by a master seed and a tuple of unit
indices (trial number, path batch, ...), so results do not depend on the
order in which units are scheduled. Uniform doubles come from
``Generator.random``, which uses the top 53 bits of each 64-bit output.

Example:
    >>> streams = RandomStreams(master_seed=7)
    >>> xs = streams.generator("trial", 3).uniform(0.0, 1.0, size=8)
"""

import threading
from typing import Dict, Tuple

import numpy as np

from MorseInsight.utils.logger import get_logger

logger = get_logger("RandomStreams")

# Stable integer keys for named units
_UNIT_KEYS: Dict[str, int] = {"data": 0, "trial": 1, "paths": 2, "fixture": 3}


def _unit_key(unit) -> int:
    if isinstance(unit, str):
        return _UNIT_KEYS[unit]
    return int(unit)


def generator_for(seed: int, *unit) -> np.random.Generator:
    """
    Build the PCG64 generator for (seed, unit...).

    Args:
        seed: Master seed (unsigned)
        *unit: Unit indices; names from {"data", "trial", "paths", "fixture"}
               or nonnegative integers

    Returns:
        np.random.Generator: independent stream for this unit
    """
    key = tuple(_unit_key(u) for u in unit)
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(sequence))


class RandomStreams:
    """
    Per-unit random streams under one master seed.

    Generators are created on demand and cached, so asking twice for the
    same unit continues the same stream. Thread-safe.

    Attributes:
        master_seed: Seed every stream derives from
        _streams: Cache of generators keyed by unit tuple
        _lock: Thread lock for the cache
    """

    def __init__(self, master_seed: int = 0):
        self.master_seed = int(master_seed)
        self._streams: Dict[Tuple[int, ...], np.random.Generator] = {}
        self._lock = threading.Lock()
        logger.debug(f"RandomStreams initialized with master seed {self.master_seed}")

    def generator(self, *unit) -> np.random.Generator:
        """Return the (cached) generator for a unit."""
        key = tuple(_unit_key(u) for u in unit)
        with self._lock:
            if key not in self._streams:
                self._streams[key] = generator_for(self.master_seed, *key)
            return self._streams[key]

    def fresh(self, *unit) -> np.random.Generator:
        """Return a new generator for a unit, restarting its stream."""
        return generator_for(self.master_seed, *unit)

    def reset(self) -> None:
        with self._lock:
            self._streams.clear()
