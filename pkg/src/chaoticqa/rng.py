"""Portable seeded random streams.

Every random quantity in the package (graph pairings, edge weights, SYK
couplings, sparse term selection, measurement samples) is drawn from a
:class:`SeedStream`. The stream is built on the PCG64 bit generator and only
uses its raw 64-bit output; the float and Gaussian transforms are implemented
here so that results do not depend on NumPy's ``Generator`` algorithms,
which are allowed to change between releases.

* uniform doubles: ``(raw >> 11) * 2**-53`` in ``[0, 1)``
* Gaussians: Box-Muller on consecutive uniform pairs, both outputs used,
  in order ``cos`` then ``sin``
* bounded integers: rejection sampling on the raw word (unbiased)

Sub-seeds are derived with SplitMix64 so independent streams can be
addressed by ``(seed, key, ...)`` tuples.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & MASK64
    digest = hashlib.blake2b(str(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(seed: int, *keys) -> int:
    """Deterministically derive a 64-bit sub-seed from ``seed`` and ``keys``."""
    h = splitmix64(int(seed) & MASK64)
    for key in keys:
        h = splitmix64(h ^ _key_to_int(key))
    return h


class SeedStream:
    """A sequential random stream fully determined by a 64-bit seed."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def raw(self, n: int) -> np.ndarray:
        return np.asarray(self._bits.random_raw(n), dtype=np.uint64)

    def uniform(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        n_pairs = (n + 1) // 2
        u = self.uniform(2 * n_pairs).reshape(n_pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
        angle = 2.0 * np.pi * u[:, 1]
        out = np.empty((n_pairs, 2))
        out[:, 0] = radius * np.cos(angle)
        out[:, 1] = radius * np.sin(angle)
        return out.reshape(-1)[:n]

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        if k <= 0:
            raise ValueError("k must be positive")
        limit = ((1 << 64) // k) * k
        while True:
            r = int(self._bits.random_raw())
            if r < limit:
                return r % k

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_without_replacement(self, population: int, k: int) -> np.ndarray:
        """Sorted indices of a uniform ``k``-subset of ``range(population)``."""
        if not 0 <= k <= population:
            raise ValueError(f"cannot draw {k} items from {population}")
        pool = np.arange(population)
        for i in range(k):
            j = i + self.below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return np.sort(pool[:k])
