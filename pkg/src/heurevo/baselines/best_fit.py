"""Place each item into the feasible bin it fills most tightly, preferring the smallest leftover capacity."""

import numpy as np


def step(item_size: float, remaining_capacities: np.ndarray) -> np.ndarray:
    return item_size - remaining_capacities
