"""Heuristic records and the evolving pool.

The pool keeps every feasible heuristic ever found. Only the top
``population_size`` performers are eligible for performance-rank sampling;
diversity-rank sampling for the second crossover parent ranges over the
whole pool.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import IO, Iterable, Optional

from .rng import Pcg32

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def idea_tokens(idea: str) -> frozenset[str]:
    """Unique tokens of an idea: lowercase, split on non-alphanumerics."""
    return frozenset(t for t in _TOKEN_SPLIT.split(idea.lower()) if t)


def diversity(reference: "Heuristic", candidate: "Heuristic") -> float:
    """Share of the candidate's idea tokens absent from the reference's.

    1.0 means a fully novel idea, 0.0 an idea with nothing new. A candidate
    with an empty token set has no attributable novelty and scores 0.
    """
    cand = idea_tokens(candidate.idea)
    if not cand:
        return 0.0
    ref = idea_tokens(reference.idea)
    return len(cand - ref) / len(cand)


@dataclass(frozen=True)
class Heuristic:
    """One evolved heuristic: idea text, source code, measured score."""

    id: str
    idea: str
    code: str
    performance: float
    origin: dict
    created_round: int

    def __post_init__(self):
        if not self.idea or not self.code:
            raise ValueError(f"heuristic {self.id!r} needs non-empty idea and code")
        if not math.isfinite(self.performance):
            raise ValueError(f"heuristic {self.id!r} has non-finite performance")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "idea": self.idea,
            "code": self.code,
            "performance": self.performance,
            "origin": self.origin,
            "round": self.created_round,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Heuristic":
        return cls(
            id=record["id"],
            idea=record["idea"],
            code=record["code"],
            performance=record["performance"],
            origin=record["origin"],
            created_round=record["round"],
        )


class HeuristicPool:
    """Insertion-ordered store of heuristics with rank-based sampling."""

    def __init__(self, population_size: int, seeds: Iterable[Heuristic] = ()):
        if population_size < 1:
            raise ValueError("population_size must be >= 1")
        self.population_size = population_size
        self.entries: list[Heuristic] = []
        self.seed_ids: list[str] = []
        self._by_id: dict[str, Heuristic] = {}
        self._best: Optional[Heuristic] = None
        self._ranked: Optional[list[Heuristic]] = None
        for h in seeds:
            self.insert(h)
            self.seed_ids.append(h.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, heuristic_id: str) -> bool:
        return heuristic_id in self._by_id

    def get(self, heuristic_id: str) -> Heuristic:
        return self._by_id[heuristic_id]

    @property
    def best(self) -> Heuristic:
        if self._best is None:
            raise ValueError("pool is empty")
        return self._best

    def insert(self, h: Heuristic) -> bool:
        """Append ``h``; return True iff it strictly beats the previous best."""
        if h.id in self._by_id:
            raise ValueError(f"duplicate heuristic id {h.id!r}")
        improved = self._best is None or h.performance > self._best.performance
        self.entries.append(h)
        self._by_id[h.id] = h
        if improved:
            self._best = h
        self._ranked = None
        return improved

    def ranked(self) -> list[Heuristic]:
        """Entries by descending performance, ties by earliest insertion."""
        if self._ranked is None:
            # sort is stable, so equal scores keep insertion order
            self._ranked = sorted(self.entries, key=lambda h: -h.performance)
        return self._ranked

    def rank_sample(self, rng: Pcg32) -> Heuristic:
        """Draw from the top performers with probability proportional to 1/rank.

        Entries ranked below ``population_size`` get probability zero.
        """
        if not self.entries:
            raise ValueError("pool is empty")
        top = self.ranked()[: self.population_size]
        total = sum(1.0 / r for r in range(1, len(top) + 1))
        u = rng.random() * total
        acc = 0.0
        for r, h in enumerate(top, start=1):
            acc += 1.0 / r
            if u < acc:
                return h
        return top[-1]

    def diversity_rank_sample(self, reference: Heuristic, rng: Pcg32) -> Heuristic:
        """Draw a second parent with probability proportional to 1/diversity-rank.

        All pool entries except the reference are eligible, ranked by
        descending novelty against the reference; ties prefer higher
        performance, then earlier insertion.
        """
        if len(self.entries) < 2:
            raise ValueError("diversity sampling needs at least 2 entries")
        candidates = [
            (idx, h) for idx, h in enumerate(self.entries) if h.id != reference.id
        ]
        if not candidates:
            raise ValueError("no candidate distinct from the reference")
        candidates.sort(key=lambda ih: (-diversity(reference, ih[1]), -ih[1].performance, ih[0]))
        total = sum(1.0 / r for r in range(1, len(candidates) + 1))
        u = rng.random() * total
        acc = 0.0
        for r, (_, h) in enumerate(candidates, start=1):
            acc += 1.0 / r
            if u < acc:
                return h
        return candidates[-1][1]

    def collapse(self) -> list[Heuristic]:
        """Discard everything except the current best and the seed entries.

        Retained entries keep their original insertion order. Returns the
        survivors.
        """
        if not self.entries:
            raise ValueError("pool is empty")
        keep = set(self.seed_ids)
        keep.add(self.best.id)
        self.entries = [h for h in self.entries if h.id in keep]
        self._by_id = {h.id: h for h in self.entries}
        self._ranked = None
        return list(self.entries)

    def dump_snapshot(self, fp: IO[str]) -> int:
        """Write one JSON record per heuristic, insertion order preserved."""
        n = 0
        for h in self.entries:
            fp.write(json.dumps(h.to_record(), separators=(",", ":")) + "\n")
            n += 1
        return n

    @classmethod
    def load_snapshot(cls, fp: IO[str], population_size: int) -> "HeuristicPool":
        pool = cls(population_size)
        for line in fp:
            line = line.strip()
            if not line:
                continue
            h = Heuristic.from_record(json.loads(line))
            pool.insert(h)
            if h.origin.get("operator") == "seed":
                pool.seed_ids.append(h.id)
        return pool
