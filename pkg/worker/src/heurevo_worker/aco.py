"""Ant-colony search over a heuristic-supplied desirability matrix.

The evolved artifact is the desirability matrix eta; the colony itself is
a fixed, standard configuration: pheromone starts at 1, move weights are
tau^alpha * eta^beta over feasible moves, evaporation is (1 - rho) per
iteration, and the iteration-best solution deposits pheromone on its
edges (q / length for route minimization, q * prize for prize
maximization).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instances import RoutingInstance
from .rng import Pcg32
from .rollouts import RolloutError

ALPHA = 1.0
BETA = 1.0
RHO = 0.1
Q = 1.0

_ETA_SEED_STREAM = 17


@dataclass
class AcoResult:
    best_objective: float
    best_solution: list
    iteration_history: list = field(default_factory=list)  # (objective, solution)


def validate_eta(eta, n: int) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (n, n):
        raise RolloutError(f"desirability matrix has shape {eta.shape}, expected ({n}, {n})")
    if not np.isfinite(eta).all():
        raise RolloutError("desirability matrix contains non-finite values")
    if (eta < 0).any():
        raise RolloutError("desirability matrix contains negative values")
    return eta


def _pick(weights: np.ndarray, rng: Pcg32) -> int:
    """Index proportional to weights; uniform when no usable mass."""
    total = float(weights.sum())
    if not np.isfinite(total) or total <= 0.0:
        return rng.randrange(len(weights))
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += float(w)
        if u < acc:
            return i
    return len(weights) - 1


def _construct_cvrp_routes(tau, eta, dist, demands, capacity, rng):
    n = len(demands)
    unvisited = list(range(1, n))
    routes: list[list[int]] = []
    route: list[int] = []
    load = capacity
    current = 0
    length = 0.0
    while unvisited:
        feasible = [j for j in unvisited if demands[j] <= load]
        if not feasible:
            length += float(dist[current, 0])
            routes.append(route)
            route = []
            load = capacity
            current = 0
            continue
        idx = np.array(feasible)
        weights = (tau[current, idx] ** ALPHA) * (eta[current, idx] ** BETA)
        j = feasible[_pick(weights, rng)]
        length += float(dist[current, j])
        load -= demands[j]
        route.append(j)
        unvisited.remove(j)
        current = j
    length += float(dist[current, 0])
    routes.append(route)
    return routes, length


def solve_cvrp(heuristic_fn, instance: RoutingInstance, ants: int, iterations: int, seed: int) -> AcoResult:
    """Minimize total route length including every depot return."""
    n = instance.n
    eta = validate_eta(
        heuristic_fn(
            instance.distances.copy(),
            instance.coordinates.copy(),
            instance.demands.copy(),
            instance.capacity,
        ),
        n,
    )
    dist = instance.distances
    demands = instance.demands
    tau = np.ones((n, n))
    rng = Pcg32(seed, stream=_ETA_SEED_STREAM)
    best = AcoResult(best_objective=float("inf"), best_solution=[])
    for _ in range(iterations):
        iter_best_length = float("inf")
        iter_best_routes: list[list[int]] = []
        for _ in range(ants):
            routes, length = _construct_cvrp_routes(
                tau, eta, dist, demands, instance.capacity, rng
            )
            if length < iter_best_length:
                iter_best_length = length
                iter_best_routes = routes
        tau *= 1.0 - RHO
        deposit = Q / iter_best_length if iter_best_length > 0 else Q
        for route in iter_best_routes:
            path = [0] + route + [0]
            for a, b in zip(path, path[1:]):
                tau[a, b] += deposit
                tau[b, a] += deposit
        best.iteration_history.append((iter_best_length, iter_best_routes))
        if iter_best_length < best.best_objective:
            best.best_objective = iter_best_length
            best.best_solution = iter_best_routes
    return best


def _construct_op_path(tau, eta, dist, maxlen, rng):
    n = dist.shape[0]
    unvisited = list(range(1, n))
    path = [0]
    current = 0
    budget = maxlen
    while True:
        feasible = [j for j in unvisited if dist[current, j] + dist[j, 0] <= budget]
        if not feasible:
            break
        idx = np.array(feasible)
        weights = (tau[current, idx] ** ALPHA) * (eta[current, idx] ** BETA)
        j = feasible[_pick(weights, rng)]
        budget -= float(dist[current, j])
        path.append(j)
        unvisited.remove(j)
        current = j
    return path


def solve_op(heuristic_fn, instance: RoutingInstance, ants: int, iterations: int, seed: int) -> AcoResult:
    """Maximize collected prize under the travel budget with return leg."""
    n = instance.n
    eta = validate_eta(
        heuristic_fn(instance.prizes.copy(), instance.distances.copy(), instance.maxlen),
        n,
    )
    dist = instance.distances
    prizes = instance.prizes
    tau = np.ones((n, n))
    rng = Pcg32(seed, stream=_ETA_SEED_STREAM)
    best = AcoResult(best_objective=0.0, best_solution=[0])
    for _ in range(iterations):
        iter_best_prize = -1.0
        iter_best_path: list[int] = [0]
        for _ in range(ants):
            path = _construct_op_path(tau, eta, dist, instance.maxlen, rng)
            prize = float(prizes[path].sum())
            if prize > iter_best_prize:
                iter_best_prize = prize
                iter_best_path = path
        tau *= 1.0 - RHO
        # maximization: deposit scales with collected prize
        deposit = Q * iter_best_prize
        closed = iter_best_path + [0]
        for a, b in zip(closed, closed[1:]):
            tau[a, b] += deposit
            tau[b, a] += deposit
        best.iteration_history.append((iter_best_prize, iter_best_path))
        if iter_best_prize > best.best_objective:
            best.best_objective = iter_best_prize
            best.best_solution = iter_best_path
    return best
