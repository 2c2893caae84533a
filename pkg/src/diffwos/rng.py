"""Counter-based random streams.

Every walk owns its own stream, keyed by (seed, evaluation-point index,
walk index, ...). Streams derived from the same key reproduce identical
draws regardless of execution order, which keeps parallel estimation
deterministic.
"""

from __future__ import annotations

import numpy as np


class RngStream:
    """A reproducible random stream identified by a seed and a key tuple."""

    __slots__ = ("seed", "key")

    def __init__(self, seed: int, key: tuple = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)

    def derive(self, *ids: int) -> "RngStream":
        """Child stream with additional key components appended."""
        return RngStream(self.seed, self.key + ids)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"
