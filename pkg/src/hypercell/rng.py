"""Counter-based random streams keyed by (seed, stream_id)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomStream:
    """A reproducible substream: the Philox key is the pair (seed, stream_id).

    Two streams with the same key produce the same draws no matter which
    worker or process consumes them, so work can be split across any number
    of workers without changing results.
    """

    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & MASK64, self.stream_id & MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "RandomStream":
        return RandomStream(self.seed, (self.stream_id + offset) & MASK64)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("expected a RandomStream or numpy Generator")
