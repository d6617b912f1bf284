"""Seeded pseudo-random number generation with a pinned algorithm.

Everything random in this package (parameter init, scene synthesis, epoch
shuffles, noise) flows through :class:`Stream` so that results are
bit-reproducible for a given seed on any platform, independent of the host
libraries' RNG implementations.

The generator is the splitmix64 counter mixer (an xorshift-multiply
finalizer over a Weyl sequence).  Output word ``n`` for seed ``s`` is::

    z = (s + (n + 1) * 0x9E3779B97F4A7C15)  mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB  mod 2**64
    out = z ^ (z >> 31)

Being counter-based it vectorizes over numpy uint64 arrays, so drawing
millions of parameters costs milliseconds, and substreams are cheap:
``spawn(k)`` reseeds with an independently mixed word.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_TWO_NEG_53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    # uint64 wraparound is the point here; silence the overflow warning
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class Stream:
    """Deterministic random stream; one instance per independent use site."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._n = np.uint64(0)

    def spawn(self, stream_id: int) -> "Stream":
        """Independent substream derived from this stream's seed and an id."""
        child = Stream(0)
        with np.errstate(over="ignore"):
            word = _mix((self._seed ^ _GAMMA) + np.uint64(stream_id) * _MIX2)
        child._seed = word
        return child

    def _words(self, n: int) -> np.ndarray:
        start = self._n + np.uint64(1)
        counters = start + np.arange(n, dtype=np.uint64)
        self._n += np.uint64(n)
        with np.errstate(over="ignore"):
            return _mix(self._seed + counters * _GAMMA)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """n doubles in [low, high), from the top 53 bits of each word."""
        u = (self._words(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53
        return low + u * (high - low)

    def normal(self, n: int) -> np.ndarray:
        """n standard normal doubles via Box-Muller (pairs of uniforms)."""
        m = (n + 1) // 2
        # keep u1 strictly positive so log() is finite
        u1 = (self._words(m) >> np.uint64(11)).astype(np.float64)
        u1 = (u1 + 1.0) * _TWO_NEG_53
        u2 = (self._words(m) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n integers in [0, bound) by 64-bit multiply-shift reduction."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        words = self._words(n)
        # (word * bound) >> 64, computed via python ints to avoid overflow
        return np.array([(int(w) * bound) >> 64 for w in words], dtype=np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n)
        if n > 1:
            words = self._words(n - 1)
            for i in range(n - 1, 0, -1):
                j = (int(words[n - 1 - i]) * (i + 1)) >> 64
                perm[i], perm[j] = perm[j], perm[i]
        return perm
