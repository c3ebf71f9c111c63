"""Counter-based random streams keyed by (seed, purpose, run, block).

Every block of samples gets its own Philox generator derived from a
``SeedSequence`` spawn key, so results do not depend on how blocks are
distributed over workers or in which order they are merged.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 1 << 16

# purpose tags keep the Monte Carlo and event-stream draws disjoint
PURPOSE_MC = 1
PURPOSE_STREAM = 2


def block_rng(seed: int, purpose: int, run: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(purpose, run, block))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(n: int, block_size: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(int(n), block_size)
    return [block_size] * full + ([rest] if rest else [])
