"""Append-only run journal with hash-chained records.

Every record is one JSON line carrying a ``prev`` field: the truncated
SHA-256 of the previous line. Journals contain no wall-clock timestamps,
so two runs over the same corpus, seed, and config produce byte-identical
files. Reports and resume both start from the verified record stream.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional


class JournalError(Exception):
    pass


def _line_hash(line: str) -> str:
    return hashlib.sha256(line.encode("utf-8")).hexdigest()[:16]


class JournalWriter:
    def __init__(self, path: Path, resume: bool = False):
        self.path = Path(path)
        self._last: Optional[str] = None
        if resume and self.path.exists():
            with self.path.open(encoding="utf-8") as fp:
                for line in fp:
                    line = line.rstrip("\n")
                    if line:
                        self._last = _line_hash(line)
            self._fp = self.path.open("a", encoding="utf-8")
        else:
            self._fp = self.path.open("w", encoding="utf-8")

    def write(self, record: dict) -> None:
        record = dict(record)
        record["prev"] = self._last
        line = json.dumps(record, separators=(",", ":"))
        self._fp.write(line + "\n")
        self._fp.flush()
        self._last = _line_hash(line)

    def close(self) -> None:
        self._fp.close()

    def __enter__(self) -> "JournalWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_journal(path: Path) -> list[dict]:
    """Load all records, verifying the hash chain."""
    records: list[dict] = []
    prev: Optional[str] = None
    with Path(path).open(encoding="utf-8") as fp:
        for line_no, line in enumerate(fp, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JournalError(f"corrupt journal line {line_no}: {exc}") from exc
            if record.get("prev") != prev:
                raise JournalError(f"hash chain broken at line {line_no}")
            records.append(record)
            prev = _line_hash(line)
    return records


def build_report(records: Iterable[dict]) -> dict:
    """Summarize a journal: trajectory, diagnosis counts, collapses, best."""
    records = list(records)
    if not records or records[0].get("event") != "meta":
        raise JournalError("journal does not start with a meta record")
    meta = records[0]
    diagnosis_counts: dict[str, int] = {}
    trajectory: list[dict] = []
    collapses: list[int] = []
    heuristics: dict[str, dict] = {}
    responses = 0
    for record in records[1:]:
        event = record.get("event")
        if event == "seed":
            heuristics[record["heuristic"]["id"]] = record["heuristic"]
        elif event == "response":
            responses += 1
            diag = record["diagnosis"]
            diagnosis_counts[diag] = diagnosis_counts.get(diag, 0) + 1
            if record.get("heuristic"):
                heuristics[record["heuristic"]["id"]] = record["heuristic"]
        elif event == "round":
            point = {
                "round": record["round"],
                "best_id": record["best_id"],
                "best_performance": record["best_performance"],
                "pool_size": record["pool_size"],
            }
            reference = meta.get("reference")
            if reference and meta.get("problem") == "obp" and reference.get("lb_mean"):
                mean_bins = -record["best_performance"]
                lb = reference["lb_mean"]
                point["gap"] = (mean_bins - lb) / lb
            trajectory.append(point)
        elif event == "collapse":
            collapses.append(record["round"])
    best: Optional[dict] = None
    if trajectory:
        last = trajectory[-1]
        best = heuristics.get(
            last["best_id"],
            {"id": last["best_id"], "performance": last["best_performance"]},
        )
    return {
        "run_id": meta.get("run_id"),
        "problem": meta.get("problem"),
        "rounds": trajectory[-1]["round"] if trajectory else 0,
        "responses": responses,
        "diagnosis_counts": diagnosis_counts,
        "collapses": collapses,
        "trajectory": trajectory,
        "best": best,
    }
