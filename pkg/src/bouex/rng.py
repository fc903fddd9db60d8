"""Counter-based random streams.

Every unit of Monte Carlo work draws from a Philox stream keyed by
``(seed, index)``.  Streams with distinct keys are independent, so the
mapping from work unit to randomness never depends on how work is
scheduled across workers: identical ``(seed, config)`` gives bit-identical
output under any parallel schedule.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for work unit `index` of the family keyed by `seed`."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    key = (int(seed) & _MASK64) | ((int(index) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def spawn_seed(rng: np.random.Generator) -> int:
    """Derive a fresh 63-bit seed from an existing generator."""
    return int(rng.integers(0, 2**63 - 1))
