"""Seeded, splittable randomness.

Every stochastic routine takes its randomness from a :class:`StatusSource`
or from explicit ``status`` values in ``[0, 1)``, so results are reproducible
and independent of scheduling.
"""

import numpy as np


class StatusSource:
    """Deterministic stream of uniforms in ``[0, 1)`` with indexed substreams.

    ``StatusSource(seed).substream(i)`` depends only on ``(seed, i)``, which
    lets parallel workers reproduce the serial per-element draws.
    """

    def __init__(self, seed=0, _key=()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._key = tuple(_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def uniform(self, size=None):
        return self._gen.random(size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def substream(self, index):
        return StatusSource(self.seed, self._key + (int(index),))

    def spawn(self, count):
        return [self.substream(i) for i in range(count)]

    @property
    def generator(self):
        return self._gen

    def __repr__(self):
        return f"StatusSource(seed={self.seed}, key={self._key})"


def as_source(rng):
    """Coerce ``None``, an int seed or a StatusSource to a StatusSource."""
    if isinstance(rng, StatusSource):
        return rng
    if rng is None:
        return StatusSource(0)
    return StatusSource(int(rng))


def implicit_randn(shape, seed=0, stddev=1.0, mean=0.0):
    """Normal samples of ``shape`` from the seeded stream."""
    return mean + stddev * StatusSource(seed).normal(shape)


def implicit_randu(shape, seed=0, low=0.0, high=1.0):
    """Uniform samples in ``[low, high)`` of ``shape`` from the seeded stream."""
    return low + (high - low) * StatusSource(seed).uniform(shape)
