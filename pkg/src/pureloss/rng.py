"""Keyed counter-based random streams.

A stream is fully determined by ``(seed, *key)``, so work split across
threads or processes draws the same numbers no matter how it is scheduled.
"""

from __future__ import annotations

import numpy as np


def keyed_generator(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1),
                                spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
