"""Portable pseudo-random number generation.

Instance files and run journals must reproduce bit-for-bit across machines,
so nothing here may depend on platform or library RNG internals. The
generator is PCG-XSH-RR 64/32 ("PCG32"): 64-bit LCG state with multiplier
6364136223846793005, stream-selectable odd increment, and an xorshift +
random-rotate output permutation to 32 bits. All arithmetic is explicit
64-bit modular integer math.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
_MULTIPLIER = 6364136223846793005


class Pcg32:
    """PCG32 stream. ``seed`` picks the state, ``stream`` the increment."""

    def __init__(self, seed: int, stream: int = 0):
        self._inc = ((stream << 1) | 1) & MASK64
        self._state = 0
        self._step()
        self._state = (self._state + (seed & MASK64)) & MASK64
        self._step()

    def _step(self) -> None:
        self._state = (self._state * _MULTIPLIER + self._inc) & MASK64

    def next_u32(self) -> int:
        state = self._state
        self._step()
        xorshifted = (((state >> 18) ^ state) >> 27) & 0xFFFFFFFF
        rot = state >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random mantissa bits."""
        hi = self.next_u32() >> 5   # 27 bits
        lo = self.next_u32() >> 6   # 26 bits
        return (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Rejection sampling, no modulo bias."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        threshold = (0x100000000 // n) * n
        while True:
            r = self.next_u32()
            if r < threshold:
                return r % n

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], both ends inclusive."""
        return low + self.randrange(high - low + 1)

    def weibull(self, shape: float, scale: float) -> float:
        """Weibull draw by inverse CDF: scale * (-ln(1 - U))^(1/shape)."""
        import math

        u = self.random()
        return scale * (-math.log(1.0 - u)) ** (1.0 / shape)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def getstate(self) -> tuple[int, int]:
        return (self._state, self._inc)

    def setstate(self, state: tuple[int, int]) -> None:
        self._state = state[0] & MASK64
        self._inc = state[1] & MASK64


def weighted_index(weights: list[float], rng: Pcg32) -> int:
    """Sample an index proportionally to non-negative ``weights``."""
    total = 0.0
    for w in weights:
        if w < 0:
            raise ValueError("weights must be non-negative")
        total += w
    if total <= 0:
        raise ValueError("at least one weight must be positive")
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1
