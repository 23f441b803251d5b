"""Benchmark problem definitions, instance generation, bounds, and scoring.

Four problems are supported: online bin packing (construction), traveling
salesman (step-by-step construction), capacitated vehicle routing and
orienteering (both solved by an ant-colony rollout in the worker). The
aggregate performance of a heuristic is the mean negated objective over
its instance set, so higher is always better.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .backends import SignatureSpec
from .rng import Pcg32

INSTANCE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ProblemSpec:
    key: str
    name: str
    unit: str
    description: str
    signature: str
    signature_spec: SignatureSpec
    direction: str  # min | max
    default_solver_params: dict = field(default_factory=dict)


PROBLEMS: dict[str, ProblemSpec] = {
    "obp": ProblemSpec(
        key="obp",
        name="Online Bin Packing",
        unit="percent gap to the packing lower bound",
        description=(
            "Items of varying size arrive one at a time and must be placed "
            "immediately into a bin with enough remaining capacity, or into a "
            "newly opened bin. The goal is to use as few bins as possible. "
            "Your function scores every currently open bin for the arriving "
            "item; the feasible bin with the highest score receives it."
        ),
        signature="def step(item_size: float, remaining_capacities: np.ndarray) -> np.ndarray:",
        signature_spec=SignatureSpec(name="step", arity=2),
        direction="min",
    ),
    "tsp": ProblemSpec(
        key="tsp",
        name="Traveling Salesman",
        unit="length units of the tour",
        description=(
            "Given pairwise distances between nodes, build a tour that visits "
            "every node exactly once and returns to the start, keeping the "
            "total length small. Your function picks the next node to visit "
            "from the set of unvisited nodes."
        ),
        signature=(
            "def select_next_node(current_node: int, destination_node: int, "
            "unvisited_nodes: set, distance_matrix: np.ndarray) -> int:"
        ),
        signature_spec=SignatureSpec(name="select_next_node", arity=4),
        direction="min",
    ),
    "cvrp": ProblemSpec(
        key="cvrp",
        name="Capacitated Vehicle Routing",
        unit="units of travel distance",
        description=(
            "Vehicles with a shared load capacity start and end at a depot and "
            "must serve every customer demand while keeping the total travel "
            "distance small. Your function builds a matrix that scores how "
            "desirable each move between nodes is; an ant-colony search uses "
            "those scores together with pheromone trails to construct routes."
        ),
        signature=(
            "def heuristics(distance_matrix: np.ndarray, coordinates: np.ndarray, "
            "demands: np.ndarray, capacity: int) -> np.ndarray:"
        ),
        signature_spec=SignatureSpec(name="heuristics", arity=4),
        direction="min",
        default_solver_params={"ants": 30, "iterations": 100},
    ),
    "op": ProblemSpec(
        key="op",
        name="Orienteering",
        unit="units of collected reward",
        description=(
            "An agent starts at a fixed node and may visit a subset of nodes, "
            "each offering a prize, without exceeding a total travel budget "
            "including the return leg. The goal is to collect as much prize as "
            "possible. Your function builds a matrix that scores how desirable "
            "each move between nodes is; an ant-colony search uses those "
            "scores together with pheromone trails to construct paths."
        ),
        signature="def heuristics(prize: np.ndarray, distance: np.ndarray, maxlen: float) -> np.ndarray:",
        signature_spec=SignatureSpec(name="heuristics", arity=3),
        direction="max",
        default_solver_params={"ants": 20, "iterations": 50},
    ),
}

OP_DEFAULT_MAXLEN = {50: 3.0, 100: 4.0, 200: 5.0}


@dataclass(frozen=True)
class ObpInstance:
    item_sizes: tuple[float, ...]
    capacity: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        for s in self.item_sizes:
            if not (0 < s <= self.capacity):
                raise ValueError("every item must fit in an empty bin")

    def to_document(self) -> dict:
        return {
            "version": INSTANCE_SCHEMA_VERSION,
            "kind": "obp",
            "capacity": self.capacity,
            "items": list(self.item_sizes),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "ObpInstance":
        _check_version(doc)
        return cls(item_sizes=tuple(doc["items"]), capacity=doc["capacity"])


@dataclass(frozen=True)
class RoutingInstance:
    kind: str  # tsp | cvrp | op
    coordinates: tuple[tuple[float, float], ...]
    demands: Optional[tuple[float, ...]] = None
    capacity: Optional[float] = None
    prizes: Optional[tuple[float, ...]] = None
    maxlen: Optional[float] = None

    def __post_init__(self):
        n = len(self.coordinates)
        if n < 2:
            raise ValueError("routing instances need at least 2 nodes")
        if self.kind == "cvrp":
            if self.demands is None or self.capacity is None:
                raise ValueError("cvrp needs demands and capacity")
            if len(self.demands) != n:
                raise ValueError("demands must cover every node")
            if self.demands[0] != 0:
                raise ValueError("depot demand must be zero")
            if any(d > self.capacity for d in self.demands):
                raise ValueError("demands must not exceed vehicle capacity")
        elif self.kind == "op":
            if self.prizes is None or self.maxlen is None:
                raise ValueError("op needs prizes and maxlen")
            if len(self.prizes) != n:
                raise ValueError("prizes must cover every node")
            if any(p < 0 for p in self.prizes):
                raise ValueError("prizes must be non-negative")
        elif self.kind != "tsp":
            raise ValueError(f"unknown routing kind {self.kind!r}")

    @property
    def n(self) -> int:
        return len(self.coordinates)

    def distance_matrix(self) -> np.ndarray:
        pts = np.asarray(self.coordinates, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))

    def to_document(self) -> dict:
        doc: dict = {
            "version": INSTANCE_SCHEMA_VERSION,
            "kind": self.kind,
            "coordinates": [list(p) for p in self.coordinates],
        }
        if self.kind == "cvrp":
            doc["demands"] = list(self.demands)
            doc["capacity"] = self.capacity
        elif self.kind == "op":
            doc["prizes"] = list(self.prizes)
            doc["maxlen"] = self.maxlen
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "RoutingInstance":
        _check_version(doc)
        return cls(
            kind=doc["kind"],
            coordinates=tuple(tuple(p) for p in doc["coordinates"]),
            demands=tuple(doc["demands"]) if "demands" in doc else None,
            capacity=doc.get("capacity"),
            prizes=tuple(doc["prizes"]) if "prizes" in doc else None,
            maxlen=doc.get("maxlen"),
        )


def _check_version(doc: dict) -> None:
    version = doc.get("version")
    if version != INSTANCE_SCHEMA_VERSION:
        raise ValueError(f"unsupported instance schema version {version!r}")


def generate_obp(
    n_items: int,
    capacity: int = 100,
    shape: float = 3.0,
    scale: float = 45.0,
    seed: int = 0,
) -> ObpInstance:
    """Weibull item sizes, rounded up and clipped to [1, capacity]."""
    if shape <= 0 or scale <= 0:
        raise ValueError("shape and scale must be positive")
    rng = Pcg32(seed, stream=11)
    sizes = []
    for _ in range(n_items):
        raw = rng.weibull(shape, scale)
        sizes.append(float(min(max(math.ceil(raw), 1), capacity)))
    return ObpInstance(item_sizes=tuple(sizes), capacity=float(capacity))


def generate_routing(
    kind: str,
    n: int,
    seed: int = 0,
    capacity: float = 50.0,
    maxlen: Optional[float] = None,
) -> RoutingInstance:
    """Uniform coordinates in the unit square; node 0 is depot/start."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = Pcg32(seed, stream=13)
    coords = tuple((rng.random(), rng.random()) for _ in range(n))
    if kind == "tsp":
        return RoutingInstance(kind="tsp", coordinates=coords)
    if kind == "cvrp":
        demands = (0.0,) + tuple(float(rng.randint(1, 9)) for _ in range(n - 1))
        return RoutingInstance(
            kind="cvrp", coordinates=coords, demands=demands, capacity=float(capacity)
        )
    if kind == "op":
        prizes = (0.0,) + tuple(1.0 - rng.random() for _ in range(n - 1))
        budget = maxlen if maxlen is not None else OP_DEFAULT_MAXLEN.get(n, 3.0)
        return RoutingInstance(kind="op", coordinates=coords, prizes=prizes, maxlen=float(budget))
    raise ValueError(f"unknown routing kind {kind!r}")


def l2_lower_bound(instance: ObpInstance) -> int:
    """Bin-count lower bound from the capacity-threshold sweep.

    For each candidate threshold a (zero plus every distinct size at most
    c/2), items are split into N1 (> c-a), N2 (in (c/2, c-a]) and N3 (in
    [a, c/2]); the bound is |N1| + |N2| plus however many extra bins the N3
    volume needs beyond the slack left in N2's bins. The best threshold
    wins, floored by the continuous bound ceil(sum/c).
    """
    sizes = list(instance.item_sizes)
    c = instance.capacity
    if not sizes:
        return 0
    total = sum(sizes)
    continuous = math.ceil(total / c - 1e-12)
    best = continuous
    candidates = {0.0} | {s for s in sizes if s <= c / 2}
    for alpha in candidates:
        n1 = n2 = 0
        sum2 = sum3 = 0.0
        for s in sizes:
            if s > c - alpha:
                n1 += 1
            elif s > c / 2:
                n2 += 1
                sum2 += s
            elif s >= alpha:
                sum3 += s
        spare = n2 * c - sum2
        extra = math.ceil((sum3 - spare) / c - 1e-12)
        best = max(best, n1 + n2 + max(0, extra))
    return best


def aggregate_performance(objectives: Sequence[float], direction: str) -> float:
    """Mean negated objective for minimization, mean objective otherwise."""
    if not objectives:
        raise ValueError("no objectives to aggregate")
    mean = sum(objectives) / len(objectives)
    if direction == "min":
        return -mean
    if direction == "max":
        return mean
    raise ValueError(f"unknown direction {direction!r}")


def optimality_gap(value: float, reference: float, direction: str) -> float:
    """Fractional gap against a reference bound or optimum (0.04 = 4%)."""
    if reference <= 0:
        raise ValueError("reference must be positive")
    if direction == "min":
        return (value - reference) / reference
    if direction == "max":
        return (reference - value) / reference
    raise ValueError(f"unknown direction {direction!r}")


def write_instance(instance, path: Path) -> None:
    path = Path(path)
    path.write_text(json.dumps(instance.to_document(), separators=(",", ":")) + "\n", encoding="utf-8")


def read_instance(path: Path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    _check_version(doc)
    if doc.get("kind") == "obp":
        return ObpInstance.from_document(doc)
    return RoutingInstance.from_document(doc)
