"""Deterministic substream derivation for parallel Monte Carlo.

Every random computation takes an explicit numpy Generator.  Parallel
replicates derive independent streams from (seed, path) so results do
not depend on scheduling or worker count.
"""

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream addressed by (seed, *path).

    Philox is counter-based, so streams with distinct spawn keys are
    independent and the mapping is stable across runs and platforms.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
