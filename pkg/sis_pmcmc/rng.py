"""Counter-based random streams.

Every random draw in the package comes from a Philox generator addressed by
``(seed, *key)``. A particle filter opens one stream per time step and draws a
``(P, N)`` block from it, so particle ``p`` always consumes the same counter
range (row ``p``) regardless of how the work is later split across threads.
Re-running with the same seed and key reproduces the same numbers bit for bit.
"""

from __future__ import annotations

import logging
from typing import Optional

import numba as nb
import numpy as np

logger = logging.getLogger("sis-pmcmc.rng")

__all__ = ["stream", "configure_threads"]


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for stream ``key`` under master ``seed``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def configure_threads(num_threads: Optional[int]) -> int:
    """Apply the numba thread count; results never depend on it."""
    if num_threads is not None:
        nb.set_num_threads(min(int(num_threads), nb.config.NUMBA_NUM_THREADS))
    current = nb.get_num_threads()
    logger.debug(f"numba threads: {current}")
    return current
