"""Counter-based random streams with explicit (seed, stream_id) addressing.

Every stochastic draw in this package flows through an :class:`RngStream`.
A stream is fully determined by its ``(seed, stream_id)`` pair, so any piece
of work (a forward pass, a sweep trial, an ensemble member) can be handed its
own stream and reproduce the same draws no matter where or in what order it
runs. Streams are backed by the Philox counter-based bit generator, keyed
directly by the pair.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream"]

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _mix64(a: int, b: int) -> int:
    # splitmix64-style finalizer; spreads (stream_id, salt) into a fresh id
    x = (a * 0x9E3779B97F4A7C15 + b) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class RngStream:
    """A seeded draw sequence, reproducible from (seed, stream_id) alone.

    Draw methods advance an internal counter; two streams constructed with
    the same pair produce identical sequences, and distinct stream ids give
    statistically independent ones. Streams may be handed across workers but
    must not be shared mutably.
    """

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.counter = 0
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return (f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"counter={self.counter})")

    def derive(self, salt: int) -> "RngStream":
        """Return an independent child stream keyed by ``salt``.

        The child's stream_id mixes the parent's stream_id with the salt, so
        derivations from different parents never collide even when the salts
        (pass indices, trial indices) repeat.
        """
        return RngStream(self.seed, _mix64(self.stream_id & _MASK64, int(salt)))

    def normal(self, shape=None) -> np.ndarray:
        self.counter += 1
        return self._gen.normal(size=shape)

    def uniform(self, shape=None) -> np.ndarray:
        self.counter += 1
        return self._gen.random(size=shape)

    def rademacher(self, shape=None) -> np.ndarray:
        """Independent +-1 draws as float64."""
        self.counter += 1
        return self._gen.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0

    def integers(self, low: int, high: int | None = None, shape=None) -> np.ndarray:
        self.counter += 1
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        self.counter += 1
        return self._gen.permutation(n)

    def multinomial(self, n: int, pvals: np.ndarray) -> np.ndarray:
        self.counter += 1
        return self._gen.multinomial(n, pvals)
