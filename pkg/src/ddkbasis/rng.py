"""Portable random streams.

Every generator in the package draws from :class:`Stream`, which wraps the
PCG64 bit generator and turns its raw 64-bit words into uniforms, Box-Muller
normals and Rayleigh variates by explicit formulas.  The transformation does
not depend on numpy's distribution code, so a given seed yields the same
numbers on every platform and numpy release that ships PCG64.

Replicate streams are split off a root seed with :func:`derive_seed`, a
SplitMix64 finalizer applied to ``root + index``.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(root: int, index: int) -> int:
    """Seed of replicate ``index`` under root seed ``root``."""
    return splitmix64((int(root) + int(index)) & _MASK)


class Stream:
    """A seeded source of uniform, normal and Rayleigh variates."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._bits = np.random.PCG64(self.seed)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(int(size))

    def uniform(self, size) -> np.ndarray:
        """Uniforms on (0, 1] with 53 bits of resolution."""
        shape = np.atleast_1d(size) if not np.isscalar(size) else (size,)
        count = int(np.prod(shape))
        u = ((self.raw(count) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        return u.reshape(shape)

    def normal(self, size) -> np.ndarray:
        """Standard normals by the Box-Muller transform, both branches used."""
        shape = tuple(np.atleast_1d(size)) if not np.isscalar(size) else (size,)
        count = int(np.prod(shape))
        half = (count + 1) // 2
        u1 = self.uniform(half)
        u2 = self.uniform(half)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * half)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:count].reshape(shape)

    def rayleigh(self, size) -> np.ndarray:
        """Standard (scale one) Rayleigh variates by inversion."""
        return np.sqrt(-2.0 * np.log(self.uniform(size)))

    def spawn(self, index: int) -> "Stream":
        return Stream(derive_seed(self.seed, index))
