"""Counter-based random streams for reproducible parallel simulation.

Every replicate gets its own Philox stream derived from (master_seed,
replicate_index), so results do not depend on how replicates are divided
among worker threads.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Return an independent generator keyed by (master_seed, *key)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def replicate_stream(master_seed: int, replicate_index: int) -> np.random.Generator:
    """Stream for one Monte Carlo replicate."""
    return substream(master_seed, replicate_index)
