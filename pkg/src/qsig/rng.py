"""Seeded random streams.

All randomness in the simulator flows through :class:`RandomStream`, a thin
wrapper around numpy's PCG64 bit generator. PCG64 output is specified
bit-for-bit, so a given seed yields the same draws on every platform. Child
streams get their seeds from a SplitMix64 mix of ``(seed, index)``.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 256
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """SplitMix64 output function (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class RandomStream:
    """Counted stream of uniform doubles in [0, 1).

    Every public method consumes a known number of draws, and ``position``
    counts the draws consumed so far. Doubles are pulled from the generator
    in blocks; PCG64 produces the same sequence either way.
    """

    __slots__ = ("seed", "position", "_gen", "_buf", "_idx")

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.position = 0
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self._buf = self._gen.random(_BLOCK).tolist()
        self._idx = 0

    def uniform(self) -> float:
        """One draw."""
        if self._idx == _BLOCK:
            self._buf = self._gen.random(_BLOCK).tolist()
            self._idx = 0
        u = self._buf[self._idx]
        self._idx += 1
        self.position += 1
        return u

    def bit(self) -> int:
        """One draw, mapped to a fair bit."""
        return 1 if self.uniform() < 0.5 else 0

    def bits(self, k: int) -> tuple[int, ...]:
        """``k`` draws, one fair bit each."""
        out: list[int] = []
        while k > 0:
            if self._idx == _BLOCK:
                self._buf = self._gen.random(_BLOCK).tolist()
                self._idx = 0
            take = min(k, _BLOCK - self._idx)
            out.extend(1 if u < 0.5 else 0 for u in self._buf[self._idx:self._idx + take])
            self._idx += take
            self.position += take
            k -= take
        return tuple(out)

    def below(self, k: int) -> int:
        """One draw, mapped to a uniform integer in ``range(k)``."""
        return min(int(self.uniform() * k), k - 1)

    def sample(self, population: int, k: int) -> list[int]:
        """Choose ``k`` distinct indices from ``range(population)``.

        Partial Fisher-Yates shuffle; consumes exactly ``k`` draws. The result
        is in selection order.
        """
        if not 0 <= k <= population:
            raise ValueError(f"cannot sample {k} of {population}")
        pool = list(range(population))
        for j in range(k):
            r = j + self.below(population - j)
            pool[j], pool[r] = pool[r], pool[j]
        return pool[:k]

    def spawn(self, index: int) -> RandomStream:
        """Independent child stream keyed by ``(seed, index)``.

        The child depends only on the parent's seed and ``index``, never on
        how far the parent has advanced, so trials can be scheduled in any
        order (or in parallel) with identical results.
        """
        return RandomStream(_splitmix64(_splitmix64(self.seed) ^ (int(index) & _MASK64)))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, position={self.position})"
