"""Seedable, splittable random streams.

All stochastic code in the package draws from PCG64 generators derived from
a (seed, stream) pair, so independent workers or chains get non-overlapping
streams and every run is reproducible from its seed.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20240817


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the PCG64 generator for a (seed, stream) pair.

    Distinct stream indices give statistically independent streams for the
    same seed; (seed, stream) fully determines the draw sequence.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


class UniformBuffer:
    """Block-buffered uniform(0,1) draws from a generator.

    PCG64 consumes the identical underlying stream whether doubles are drawn
    one at a time or in blocks, so buffering is a pure speed optimization:
    ``UniformBuffer(make_rng(s, k))`` yields the same sequence as repeated
    ``make_rng(s, k).random()`` calls.
    """

    def __init__(self, rng: np.random.Generator, block: int = 65536):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self._block:
            self._buf = self._rng.random(self._block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u
