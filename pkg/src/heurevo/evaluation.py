"""Heuristic evaluation: tasks, results, and interchangeable evaluators.

Three evaluators cover the engine's needs: a scripted stub that injects
planted results (tests, replayed runs), an in-process evaluator for trusted
code on the construction problems, and a subprocess client that sends work
to an isolated worker over a line protocol and hard-kills it when the time
budget plus grace expires. Untrusted LLM output should only ever run behind
the subprocess evaluator.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .problems import ObpInstance, PROBLEMS, RoutingInstance, aggregate_performance

PROTOCOL_VERSION = 1


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class EvalTask:
    code: str
    problem: str
    instances: tuple
    solver_params: dict = field(default_factory=dict)
    seed: int = 0
    budget_s: float = 60.0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.budget_s <= 0:
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class EvalResult:
    status: str  # ok | runtime_error | timeout
    objectives: tuple[float, ...] = ()
    g: Optional[float] = None
    error: Optional[str] = None
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.status == "ok" and self.g is None:
            raise ValueError("successful evaluation must carry a score")


def code_digest(code: str) -> str:
    return hashlib.sha256(code.encode("utf-8")).hexdigest()


def load_heuristic_function(code: str, name: str):
    """Execute heuristic source in a fresh namespace and fetch its function."""
    namespace: dict = {"__name__": "heuristic"}
    exec(compile(code, "<heuristic>", "exec"), namespace)
    fn = namespace.get(name)
    if not callable(fn):
        raise EvaluationError(f"heuristic does not define a callable {name!r}")
    return fn


def simulate_obp(step_fn, instance: ObpInstance) -> float:
    """Run the arrival loop; returns the number of bins opened.

    Each arriving item is scored against all open bins; the feasible bin
    with the highest score gets it (ties to the lowest index); with no
    feasible bin a new one opens. Scores on feasible bins must be finite.
    """
    remaining = np.empty(max(len(instance.item_sizes), 1), dtype=float)
    count = 0
    for item in instance.item_sizes:
        chosen = -1
        if count:
            open_bins = remaining[:count]
            feasible = np.flatnonzero(open_bins >= item)
            if feasible.size:
                # the heuristic gets a copy so it cannot corrupt bin state
                scores = np.asarray(step_fn(item, open_bins.copy()), dtype=float)
                if scores.shape != (count,):
                    raise EvaluationError(
                        f"bin scores have shape {scores.shape}, expected ({count},)"
                    )
                feasible_scores = scores[feasible]
                if not np.isfinite(feasible_scores).all():
                    raise EvaluationError("non-finite score on a feasible bin")
                # argmax returns the first maximum: ties go to the lowest index
                chosen = int(feasible[int(np.argmax(feasible_scores))])
        if chosen < 0:
            remaining[count] = instance.capacity - item
            count += 1
        else:
            remaining[chosen] -= item
    return float(count)


def simulate_tsp(select_fn, instance: RoutingInstance) -> float:
    """Construct a tour from node 0 by repeated next-node calls."""
    dist = instance.distance_matrix()
    unvisited = set(range(1, instance.n))
    current = 0
    total = 0.0
    while unvisited:
        nxt = select_fn(current, 0, set(unvisited), dist)
        if not isinstance(nxt, (int, np.integer)) or int(nxt) not in unvisited:
            raise EvaluationError(f"heuristic returned invalid node {nxt!r}")
        nxt = int(nxt)
        total += float(dist[current][nxt])
        current = nxt
        unvisited.remove(nxt)
    total += float(dist[current][0])
    return total


class ScriptedEvaluator:
    """Planted results keyed by the sha256 of the heuristic source.

    Entries map a digest to {"g": float} (optionally with "objectives") or
    {"error": "..."} for a planted runtime failure. Unknown code yields a
    runtime error so a broken fixture is loud instead of silently scored.
    """

    def __init__(self, scores: dict[str, dict]):
        self._scores = dict(scores)

    @classmethod
    def from_file(cls, path) -> "ScriptedEvaluator":
        with open(path, encoding="utf-8") as fp:
            return cls(json.load(fp))

    def evaluate(self, task: EvalTask) -> EvalResult:
        entry = self._scores.get(code_digest(task.code))
        if entry is None:
            return EvalResult(status="runtime_error", error="no scripted result for this code")
        if "error" in entry:
            return EvalResult(status="runtime_error", error=str(entry["error"]))
        if "timeout" in entry:
            return EvalResult(status="timeout", error="scripted timeout")
        return EvalResult(
            status="ok",
            objectives=tuple(entry.get("objectives", ())),
            g=float(entry["g"]),
        )


class TrustedLocalEvaluator:
    """In-process evaluation for trusted code (bundled baselines, seeds).

    Supports the construction problems only; the routing problems need the
    ant-colony engine hosted by the sandbox worker. The time budget is
    checked between instances, so a pathological heuristic can overshoot by
    at most one instance; never feed untrusted code through this path.
    """

    def evaluate(self, task: EvalTask) -> EvalResult:
        spec = PROBLEMS[task.problem]
        if task.problem not in ("obp", "tsp"):
            return EvalResult(
                status="runtime_error",
                error=f"in-process evaluation does not support {task.problem!r}; use the worker",
            )
        started = time.monotonic()
        objectives: list[float] = []
        try:
            fn = load_heuristic_function(task.code, spec.signature_spec.name)
            for instance in task.instances:
                if time.monotonic() - started > task.budget_s:
                    return EvalResult(
                        status="timeout",
                        error="evaluation budget exceeded",
                        elapsed_s=time.monotonic() - started,
                    )
                if task.problem == "obp":
                    objectives.append(simulate_obp(fn, instance))
                else:
                    objectives.append(simulate_tsp(fn, instance))
        except EvaluationError as exc:
            return EvalResult(status="runtime_error", error=str(exc), elapsed_s=time.monotonic() - started)
        except Exception as exc:  # untrusted-ish failure surface stays narrow
            return EvalResult(
                status="runtime_error",
                error=f"{type(exc).__name__}: {exc}",
                elapsed_s=time.monotonic() - started,
            )
        elapsed = time.monotonic() - started
        g = aggregate_performance(objectives, spec.direction)
        return EvalResult(status="ok", objectives=tuple(objectives), g=g, elapsed_s=elapsed)


class SubprocessEvaluator:
    """Client for the external worker speaking JSON lines over stdio.

    One persistent worker process serves sequential requests; if a response
    does not arrive within budget + grace the process is killed and the
    task reported as a timeout. A fresh worker is spawned for the next task.
    """

    def __init__(self, worker_cmd: Sequence[str], grace_s: float = 2.0):
        if not worker_cmd:
            raise ValueError("worker command must not be empty")
        self._cmd = list(worker_cmd)
        self._grace = grace_s
        self._proc: Optional[subprocess.Popen] = None
        self._counter = 0

    def _ensure_worker(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self._cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        return self._proc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    def _kill_worker(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    def evaluate(self, task: EvalTask) -> EvalResult:
        spec = PROBLEMS[task.problem]
        self._counter += 1
        request = {
            "version": PROTOCOL_VERSION,
            "id": f"req-{self._counter}",
            "code": task.code,
            "problem": task.problem,
            "instances": [inst.to_document() for inst in task.instances],
            "params": {**spec.default_solver_params, **task.solver_params, "seed": task.seed},
            "budget_s": task.budget_s,
        }
        proc = self._ensure_worker()
        started = time.monotonic()
        try:
            proc.stdin.write(json.dumps(request, separators=(",", ":")) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._kill_worker()
            raise EvaluationError(f"worker unavailable: {exc}") from exc

        line_holder: list[str] = []

        def _read():
            line_holder.append(proc.stdout.readline())

        reader = threading.Thread(target=_read, daemon=True)
        reader.start()
        reader.join(task.budget_s + self._grace)
        elapsed = time.monotonic() - started
        if reader.is_alive() or not line_holder or not line_holder[0]:
            self._kill_worker()
            return EvalResult(status="timeout", error="worker killed at hard budget", elapsed_s=elapsed)

        try:
            response = json.loads(line_holder[0])
        except json.JSONDecodeError as exc:
            self._kill_worker()
            raise EvaluationError(f"worker sent malformed response: {exc}") from exc
        status = response.get("status")
        if status == "ok":
            objectives = tuple(float(x) for x in response["objectives"])
            g = aggregate_performance(objectives, spec.direction)
            return EvalResult(status="ok", objectives=objectives, g=g, elapsed_s=elapsed)
        if status in ("runtime_error", "timeout"):
            return EvalResult(status=status, error=response.get("error"), elapsed_s=elapsed)
        raise EvaluationError(f"worker protocol error: {response!r}")
