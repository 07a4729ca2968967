"""Deterministic pseudo-random primitives used for mask plans and data seeds.

Everything here is defined over plain Python integers so that identical
inputs give identical outputs on every platform and in every language
that reimplements the same scheme.  The generator is SplitMix64
(Steele, Lea & Flood 2014):

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state
    z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
    z <- (z XOR (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
    output <- z XOR (z >> 31)

Derived seeds are produced by folding extra words into the stream with
``mix``.  Bounded integers use the multiply-shift reduction
``(x * n) >> 64``, and shuffles are standard Fisher-Yates driven by
those bounded draws.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix(*words: int) -> int:
    """Fold integer words into a single 64-bit seed.

    Associativity is deliberate: mix(a, b, c) chains one SplitMix64
    step per word, so distinct word tuples give independent streams.
    """
    state = 0
    for w in words:
        state = (state + _GAMMA + (w & _MASK64)) & _MASK64
        state = _mix64(state)
    return state


class Mix64:
    """SplitMix64 stream over Python integers."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix64(self._state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via multiply-shift reduction."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return (self.next_u64() * n) >> 64

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """First k entries of a Fisher-Yates partial shuffle of range(n).

        Draws are uniform without replacement; the result keeps the
        draw order (callers sort if they need ascending indices).
        """
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
