"""Seeded random streams.

Draws come from numpy's PCG64 generator keyed by ``SeedSequence(seed,
spawn_key=(stream,))``, so a given ``(seed, stream)`` yields the same sequence
on every platform.  Gaussians use the inverse normal CDF rather than a
rejection sampler so each normal consumes exactly one uniform.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri


class RngHandle:
    """Reproducible random stream; each worker should own its own handle."""

    def __init__(self, seed: int = 0, stream: int = 0):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if stream < 0:
            raise ValueError("stream must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngHandle(seed={self.seed}, stream={self.stream})"

    def substream(self, index: int) -> "RngHandle":
        """Independent handle for worker/replicate ``index``.

        Substreams of stream ``s`` are numbered ``s * 2**32 + index + 1`` so
        they never collide with top-level streams below ``2**32``.
        """
        return RngHandle(self.seed, (self.stream << 32) + index + 1)

    def uniform(self, size=None):
        """Uniforms on the open interval (0, 1)."""
        u = self._gen.random(size)
        if size is None:
            while u == 0.0:
                u = self._gen.random()
            return float(u)
        zero = u == 0.0
        while zero.any():
            u[zero] = self._gen.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def normal(self, size=None):
        return ndtri(self.uniform(size))

    def inverse_gaussian(self, mean, shape, size=None):
        """Inverse Gaussian draws (Michael, Schucany and Haas transform)."""
        mean = np.asarray(mean, dtype=float)
        shape = np.asarray(shape, dtype=float)
        nu = self.normal(size) ** 2
        r = mean * nu / (2 * shape)
        # smaller root of the quadratic, written without cancellation
        x = mean / (1 + r + np.sqrt(r * (r + 2)))
        u = self.uniform(size)
        out = np.where(u <= mean / (mean + x), x, mean * mean / x)
        return float(out) if np.ndim(out) == 0 else out
