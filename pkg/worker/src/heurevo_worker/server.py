"""Line-protocol server: one JSON request in, one JSON response out.

The real stdout file descriptor is duplicated for protocol writes and fd 1
is pointed at /dev/null before any untrusted code runs, so stray prints
(or direct writes to fd 1) cannot corrupt the protocol stream. A soft time
budget is enforced with an interval timer; code that blocks signals or
spins inside C is the parent's problem, which kills the process at the
hard deadline.
"""

from __future__ import annotations

import json
import os
import signal
import sys
import traceback
from typing import TextIO

from . import PROTOCOL_VERSION
from .aco import solve_cvrp, solve_op
from .instances import InstanceError, parse_instance
from .rollouts import RolloutError, rollout_obp, rollout_tsp

SIGNATURES = {
    "obp": ("step", 2),
    "tsp": ("select_next_node", 4),
    "cvrp": ("heuristics", 4),
    "op": ("heuristics", 3),
}

DEFAULT_SOLVER_PARAMS = {
    "cvrp": {"ants": 30, "iterations": 100},
    "op": {"ants": 20, "iterations": 50},
}

_TRACEBACK_LIMIT = 2000


class SoftTimeout(Exception):
    pass


def _alarm_handler(signum, frame):
    raise SoftTimeout()


def _load_function(code: str, problem: str):
    name, arity = SIGNATURES[problem]
    namespace: dict = {"__name__": "heuristic"}
    exec(compile(code, "<heuristic>", "exec"), namespace)
    fn = namespace.get(name)
    if not callable(fn):
        raise RolloutError(f"heuristic does not define a callable {name!r}")
    if getattr(fn, "__code__", None) is None or fn.__code__.co_argcount != arity:
        raise RolloutError(f"{name!r} must take exactly {arity} positional arguments")
    return fn


def _evaluate(record: dict) -> dict:
    problem = record["problem"]
    instances = [parse_instance(doc) for doc in record["instances"]]
    params = dict(DEFAULT_SOLVER_PARAMS.get(problem, {}))
    params.update(record.get("params") or {})
    seed = int(params.get("seed", 0))
    budget = float(record.get("budget_s", 60.0))
    if budget <= 0:
        raise InstanceError("budget_s must be positive")

    signal.signal(signal.SIGALRM, _alarm_handler)
    signal.setitimer(signal.ITIMER_REAL, budget)
    try:
        fn = _load_function(record["code"], problem)
        objectives: list[float] = []
        for instance in instances:
            if problem == "obp":
                objectives.append(rollout_obp(fn, instance))
            elif problem == "tsp":
                objectives.append(rollout_tsp(fn, instance))
            elif problem == "cvrp":
                result = solve_cvrp(
                    fn, instance, int(params["ants"]), int(params["iterations"]), seed
                )
                objectives.append(result.best_objective)
            else:
                result = solve_op(
                    fn, instance, int(params["ants"]), int(params["iterations"]), seed
                )
                objectives.append(result.best_objective)
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0.0)
    return {"status": "ok", "objectives": objectives}


def handle_line(line: str) -> dict:
    """Map one request line to one response record; never raises."""
    response_id = None
    try:
        record = json.loads(line)
        if not isinstance(record, dict):
            raise ValueError("request must be a JSON object")
        response_id = record.get("id")
        if record.get("version") != PROTOCOL_VERSION:
            raise ValueError(f"unsupported protocol version {record.get('version')!r}")
        problem = record.get("problem")
        if problem not in SIGNATURES:
            raise ValueError(f"unknown problem {problem!r}")
        if not isinstance(record.get("code"), str) or not record["code"]:
            raise ValueError("request carries no heuristic code")
        if not isinstance(record.get("instances"), list) or not record["instances"]:
            raise ValueError("request carries no instances")
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        return {
            "version": PROTOCOL_VERSION,
            "id": response_id,
            "status": "protocol_error",
            "error": str(exc),
        }

    base = {"version": PROTOCOL_VERSION, "id": response_id}
    try:
        result = _evaluate(record)
    except SoftTimeout:
        return {**base, "status": "timeout", "error": "soft time budget exceeded"}
    except InstanceError as exc:
        return {**base, "status": "protocol_error", "error": str(exc)}
    except RolloutError as exc:
        return {**base, "status": "runtime_error", "error": "RolloutError",
                "traceback": str(exc)[-_TRACEBACK_LIMIT:]}
    except BaseException as exc:  # untrusted code can raise anything
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        return {
            **base,
            "status": "runtime_error",
            "error": type(exc).__name__,
            "traceback": traceback.format_exc()[-_TRACEBACK_LIMIT:],
        }
    return {**base, **result}


def _claim_protocol_stdout() -> TextIO:
    """Reserve the real stdout for protocol lines; send fd 1 to /dev/null."""
    protocol_fd = os.dup(1)
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.close(devnull)
    sys.stdout = os.fdopen(1, "w")
    return os.fdopen(protocol_fd, "w")


def serve(stdin=None, protocol_out: TextIO | None = None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    out = protocol_out if protocol_out is not None else _claim_protocol_stdout()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        response = handle_line(line)
        out.write(json.dumps(response, separators=(",", ":")) + "\n")
        out.flush()


def main() -> int:
    serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
