"""Reproducible random streams.

Every stream is a Philox (counter-based) generator keyed by
``SeedSequence(seed, spawn_key=(crc32(purpose), index))``, so each
(seed, purpose, trial) triple gets an independent stream regardless of the
order in which trials are run.
"""

import zlib

import numpy as np

RNG_NAME = "philox4x64/seedsequence(seed;crc32(purpose),trial)"


def stream(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    key = (zlib.crc32(purpose.encode()), int(index))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))
