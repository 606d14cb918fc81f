"""Seeded random number generation.

Every source of randomness in the package (weight init, dropout masks,
shuffles, flips) draws from an `Rng`, a thin wrapper around numpy's PCG64
bit generator. The same seed always yields the same stream, and derived
streams (`child`) are a pure function of (seed, key path), so a whole
training run is reproducible from a single integer.
"""

from __future__ import annotations

import numpy as np

# Recorded in checkpoint metadata so a saved run names its generator.
RNG_ALGORITHM = "pcg64"


class Rng:
    """Deterministic random stream keyed by a seed plus an optional key path."""

    def __init__(self, seed: int, *key):
        self.seed = int(seed)
        self.key = tuple(_key_int(k) for k in key)
        seq = np.random.SeedSequence((self.seed,) + self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def child(self, *key) -> "Rng":
        """Independent derived stream; same (seed, path) → same stream."""
        return Rng(self.seed, *self.key, *(_key_int(k) for k in key))

    def normal(self, shape, mean=0.0, std=1.0, dtype=np.float32) -> np.ndarray:
        return self._gen.normal(mean, std, size=shape).astype(dtype)

    def uniform(self, shape, dtype=np.float64) -> np.ndarray:
        return self._gen.random(size=shape, dtype=np.float64).astype(dtype)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def coin(self, p: float) -> bool:
        return bool(self._gen.random() < p)


def _key_int(k) -> int:
    """Map a key component (int or short string) to an integer."""
    if isinstance(k, str):
        # stable, platform-independent string fold
        acc = 0
        for ch in k.encode("utf-8"):
            acc = (acc * 257 + ch) % (2**61 - 1)
        return acc
    return int(k)
