"""Counter-based random streams keyed by (seed, *labels)."""

from __future__ import annotations

import numpy as np


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Independent Philox stream for a seed and any number of integer labels.

    Streams for different label tuples are statistically independent, so
    replicates can be generated in any order.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
