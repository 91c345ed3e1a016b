"""Counter-based random streams keyed by (master seed, stream, index...).

Every random draw in the package goes through :func:`stream` so that results
depend only on the keys, never on call order or worker assignment.
"""

from __future__ import annotations

import numpy as np

# Stream identifiers; kept as ints because SeedSequence spawn keys must be ints.
DISORDER = 1
SHOTS = 2
NOISE = 3
BOOTSTRAP = 4
MEASURE = 5
TRIALS = 6
SYNTHETIC = 7


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for ``seed`` and the spawn path ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit child seed for the spawn path ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
