"""Deterministic random-stream derivation.

Resampling loops (permutations, bootstrap replicates, hold-out splits) must
produce identical results regardless of execution order, so every iteration
derives its own generator from the pair (master seed, stream index) instead
of consuming a shared stream.
"""

import numpy as np


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for stream `index` of master `seed`; schedule-independent."""
    if seed < 0 or index < 0:
        raise ValueError("seed and stream index must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(index))))
