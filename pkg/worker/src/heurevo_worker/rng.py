"""Self-contained PCG32 stream so rollouts reproduce bit-for-bit.

PCG-XSH-RR 64/32 with the reference multiplier 6364136223846793005 and a
stream-selectable odd increment; uniform doubles take 53 bits from two
consecutive 32-bit outputs.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
_MULTIPLIER = 6364136223846793005


class Pcg32:
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
        hi = self.next_u32() >> 5
        lo = self.next_u32() >> 6
        return (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0)

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        threshold = (0x100000000 // n) * n
        while True:
            r = self.next_u32()
            if r < threshold:
                return r % n
