"""Per-decision-step rollout engines for the construction problems.

The heuristic function is called once per decision inside this process;
crossing the process boundary per step would dominate the runtime.
"""

from __future__ import annotations

import numpy as np

from .instances import ObpInstance, RoutingInstance


class RolloutError(Exception):
    pass


def rollout_obp(step_fn, instance: ObpInstance) -> float:
    """Arrival loop; the feasible bin with the highest score takes the item.

    Ties go to the lowest bin index; with no feasible bin a new one opens.
    A non-finite score on a feasible bin aborts the rollout.
    """
    remaining = np.empty(max(len(instance.item_sizes), 1), dtype=float)
    count = 0
    for item in instance.item_sizes:
        chosen = -1
        if count:
            open_bins = remaining[:count]
            feasible = np.flatnonzero(open_bins >= item)
            if feasible.size:
                scores = np.asarray(step_fn(item, open_bins.copy()), dtype=float)
                if scores.shape != (count,):
                    raise RolloutError(
                        f"bin scores have shape {scores.shape}, expected ({count},)"
                    )
                feasible_scores = scores[feasible]
                if not np.isfinite(feasible_scores).all():
                    raise RolloutError("non-finite score on a feasible bin")
                chosen = int(feasible[int(np.argmax(feasible_scores))])
        if chosen < 0:
            remaining[count] = instance.capacity - item
            count += 1
        else:
            remaining[chosen] -= item
    return float(count)


def rollout_tsp(select_fn, instance: RoutingInstance) -> float:
    """Start at node 0, repeatedly ask for the next node, close the tour."""
    dist = instance.distances
    unvisited = set(range(1, instance.n))
    current = 0
    total = 0.0
    while unvisited:
        nxt = select_fn(current, 0, set(unvisited), dist)
        if not isinstance(nxt, (int, np.integer)) or int(nxt) not in unvisited:
            raise RolloutError(f"heuristic returned invalid node {nxt!r}")
        nxt = int(nxt)
        total += float(dist[current, nxt])
        current = nxt
        unvisited.remove(nxt)
    total += float(dist[current, 0])
    return total
