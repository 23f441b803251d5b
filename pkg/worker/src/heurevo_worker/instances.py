"""Wire-format instance documents and their in-memory forms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

SCHEMA_VERSION = 1


class InstanceError(Exception):
    pass


@dataclass(frozen=True)
class ObpInstance:
    item_sizes: tuple[float, ...]
    capacity: float


@dataclass(frozen=True)
class RoutingInstance:
    kind: str
    coordinates: np.ndarray  # (n, 2)
    distances: np.ndarray  # (n, n) Euclidean
    demands: Optional[np.ndarray] = None
    capacity: Optional[float] = None
    prizes: Optional[np.ndarray] = None
    maxlen: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.coordinates)


def parse_instance(doc: dict):
    try:
        return _parse_instance(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance document: {exc!r}") from exc


def _parse_instance(doc: dict):
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be an object")
    if doc.get("version") != SCHEMA_VERSION:
        raise InstanceError(f"unsupported instance schema version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind == "obp":
        items = tuple(float(x) for x in doc["items"])
        capacity = float(doc["capacity"])
        if capacity <= 0 or any(not (0 < s <= capacity) for s in items):
            raise InstanceError("items must be positive and fit the bin capacity")
        return ObpInstance(item_sizes=items, capacity=capacity)
    if kind in ("tsp", "cvrp", "op"):
        coords = np.asarray(doc["coordinates"], dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 2:
            raise InstanceError("coordinates must be an (n, 2) array with n >= 2")
        diff = coords[:, None, :] - coords[None, :, :]
        distances = np.sqrt((diff**2).sum(axis=2))
        demands = capacity = prizes = maxlen = None
        if kind == "cvrp":
            demands = np.asarray(doc["demands"], dtype=float)
            capacity = float(doc["capacity"])
            if len(demands) != len(coords) or demands[0] != 0:
                raise InstanceError("cvrp needs one demand per node with a zero-demand depot")
            if capacity <= 0 or np.any(demands > capacity):
                raise InstanceError("demands must fit the vehicle capacity")
        elif kind == "op":
            prizes = np.asarray(doc["prizes"], dtype=float)
            maxlen = float(doc["maxlen"])
            if len(prizes) != len(coords) or np.any(prizes < 0) or maxlen <= 0:
                raise InstanceError("op needs non-negative prizes and a positive budget")
        return RoutingInstance(
            kind=kind,
            coordinates=coords,
            distances=distances,
            demands=demands,
            capacity=capacity,
            prizes=prizes,
            maxlen=maxlen,
        )
    raise InstanceError(f"unknown instance kind {kind!r}")
