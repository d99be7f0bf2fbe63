"""Deterministic 64-bit random generator used everywhere in the package.

Training and simulation must produce byte-identical output for a given seed
on any platform and any Python/numpy version, so nothing here delegates to
library RNGs whose streams are allowed to change. The generator is splitmix64
(Steele, Lea, Flood 2014): a 64-bit counter stepped by a fixed increment and
passed through an avalanche mixer. Bounded integers use rejection sampling
(no modulo bias), uniforms take the top 53 bits, and Gaussians use a
stateless Box-Muller so the draw count per call is always exactly two.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer. Bijective on 64-bit integers."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Seed for an independent substream, e.g. one per tree.

    mix64(seed XOR mix64(stream)): because mix64 is a bijection, distinct
    stream ids always yield distinct substream seeds under a fixed seed.
    """
    return mix64((seed & _MASK) ^ mix64(stream))


class SplitMix64:
    """Seedable generator with a pinned-forever output stream."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return mix64(self._state)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound). Rejection sampling, unbiased."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Gaussian draw via Box-Muller. Consumes exactly two uniforms."""
        # u1 is shifted into (0, 1] so log() is always defined
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
