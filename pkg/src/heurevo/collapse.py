"""Stagnation tracking and the probabilistic pool reset.

A counter arms once the pool is full and counts prompt rounds without a
strict global improvement. Each armed round the reset fires with hazard
``counter * delta0``, and unconditionally once the counter reaches the hard
cap. The expected stagnation length under the pure hazard process has the
closed form sqrt(pi / (2 * delta0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .rng import Pcg32


@dataclass
class CollapseState:
    """Counter is -1 until the pool first fills; 0 after an improvement."""

    delta0: float = 0.0005
    cap: Optional[int] = 25
    counter: int = -1

    def __post_init__(self):
        if not (0 < self.delta0 < 1):
            raise ValueError("delta0 must lie in (0, 1)")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be a positive integer or None")

    @property
    def stagnation_rounds(self) -> int:
        """Non-negative view of the counter for reporting."""
        return max(self.counter, 0)

    def observe_round(self, new_global_best: bool, pool_full: bool) -> int:
        """Advance the counter after one prompt round."""
        if not new_global_best and pool_full:
            self.counter = max(self.counter, 0) + 1
        else:
            self.counter = min(self.counter, 0)
        return self.counter

    def should_collapse(self, rng: Pcg32) -> bool:
        """Decide whether to reset at the end of this round.

        Consumes exactly one uniform draw whenever the counter is armed
        (>= 1), even if the cap alone already decides, so replayed runs
        see identical rng streams.
        """
        if self.counter < 1:
            return False
        u = rng.random()
        if self.cap is not None and self.counter >= self.cap:
            return True
        return u < self.counter * self.delta0

    def reset(self) -> None:
        self.counter = -1


def expected_stagnation_rounds(delta0: float) -> float:
    """Closed-form mean rounds before a reset, cap effectively unbounded."""
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    return math.sqrt(math.pi / (2.0 * delta0))


def survival_probability(delta0: float, k: int) -> float:
    """Probability the process survives beyond k armed rounds."""
    if k < 0:
        raise ValueError("k must be >= 0")
    p = 1.0
    for i in range(1, k + 1):
        p *= max(0.0, 1.0 - i * delta0)
    return p


def simulate_stagnation(
    delta0: float,
    cap: Optional[int],
    trials: int,
    rng: Pcg32,
) -> list[int]:
    """Monte Carlo of the hazard process; returns the reset round per trial."""
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    lengths: list[int] = []
    for _ in range(trials):
        k = 0
        while True:
            k += 1
            u = rng.random()
            if cap is not None and k >= cap:
                break
            if u < k * delta0:
                break
        lengths.append(k)
    return lengths
