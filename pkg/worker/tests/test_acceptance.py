"""Acceptance gate for the worker: one printed verdict line per criterion."""

import time

from heurevo_worker.aco import solve_cvrp, solve_op
from heurevo_worker.rng import Pcg32

from .conftest import (
    BEST_FIT,
    INVERSE_DISTANCE_CVRP,
    WorkerProcess,
    obp_doc,
    parse,
    random_cvrp_doc,
    random_op_doc,
    request,
)
from .oracles import optimal_cvrp


def _verdict(name: str, passed: bool) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'}")
    assert passed, name


def test_infinite_loop_killed_within_budget_plus_grace():
    budget = 1.0
    grace = 2.0

    # interruptible spin: the in-worker soft timer fires at the budget
    spin = "def step(a, b):\n    while True:\n        pass\n"
    with WorkerProcess() as worker:
        started = time.monotonic()
        got = worker.roundtrip(
            request(spin, "obp", [obp_doc([10, 10])], budget_s=budget),
            deadline_s=budget + grace,
        )
        elapsed = time.monotonic() - started
        soft_ok = got is not None and got["status"] == "timeout" and elapsed <= budget + grace

    # signal-proof spin: the parent hard-kills at budget + grace
    blocked_spin = (
        "import signal\n"
        "signal.pthread_sigmask(signal.SIG_BLOCK, {signal.SIGALRM})\n"
        "def step(a, b):\n"
        "    while True:\n"
        "        pass\n"
    )
    with WorkerProcess() as worker:
        started = time.monotonic()
        got = worker.roundtrip(
            request(blocked_spin, "obp", [obp_doc([10, 10])], budget_s=budget),
            deadline_s=budget + grace,
        )
        elapsed = time.monotonic() - started
        hard_ok = got is None and elapsed <= budget + grace + 1.5 and not worker.alive()

    print(f"  soft timeout path: {soft_ok}; hard kill path: {hard_ok} ({elapsed:.2f}s)")
    _verdict("infinite-loop-kill", soft_ok and hard_ok)


def test_crash_isolation_across_sequential_requests():
    crashing = "def step(a, b):\n    raise MemoryError('planted')\n"
    ok = True
    with WorkerProcess() as worker:
        pid = worker.pid
        for i in range(100):
            if i % 2 == 0:
                got = worker.roundtrip(
                    request(crashing, "obp", [obp_doc([10, 10])], rid=f"crash-{i}"), deadline_s=15
                )
                ok = ok and got is not None and got["status"] == "runtime_error"
            else:
                got = worker.roundtrip(
                    request(BEST_FIT, "obp", [obp_doc([60, 60, 60])], rid=f"ok-{i}"),
                    deadline_s=15,
                )
                ok = ok and got is not None and got["status"] == "ok"
                ok = ok and got["objectives"] == [3.0]
        ok = ok and worker.alive() and worker.pid == pid
    _verdict("crash-isolation", ok)


def test_aco_reaches_brute_force_optimum_on_small_cvrp():
    doc = random_cvrp_doc(seed=11, n=8, capacity=15.0)
    inst = parse(doc)
    optimum = optimal_cvrp(inst.distances, inst.demands, inst.capacity)

    def eta_fn(distance_matrix, coordinates, demands, capacity):
        return 1.0 / (distance_matrix + 1e-10)

    result = solve_cvrp(eta_fn, inst, ants=30, iterations=100, seed=3)
    gap = (result.best_objective - optimum) / optimum
    print(f"  aco {result.best_objective:.4f} vs optimum {optimum:.4f} (gap {gap * 100:.2f}%)")
    ok = result.best_objective >= optimum - 1e-9 and gap <= 0.05

    # the same instance through the wire protocol gives the same answer
    with WorkerProcess() as worker:
        got = worker.roundtrip(
            request(
                INVERSE_DISTANCE_CVRP, "cvrp", [doc],
                params={"ants": 30, "iterations": 100}, seed=3, budget_s=120.0,
            ),
            deadline_s=120,
        )
        ok = ok and got is not None and got["status"] == "ok"
        ok = ok and abs(got["objectives"][0] - result.best_objective) < 1e-9
    _verdict("aco-optimality", ok)


def test_feasibility_on_randomized_rollouts():
    def cvrp_eta(distance_matrix, coordinates, demands, capacity):
        return 1.0 / (distance_matrix + 1e-10)

    def op_eta(prize, distance, maxlen):
        return (prize[None, :] + 0.01) / (distance + 1e-10)

    rng = Pcg32(2025)
    checked = 0
    ok = True
    for trial in range(500):
        n = 4 + rng.randrange(5)
        inst = parse(random_cvrp_doc(seed=trial, n=n, capacity=12.0))
        result = solve_cvrp(cvrp_eta, inst, ants=2, iterations=2, seed=trial)
        for _, routes in result.iteration_history:
            checked += 1
            served = sorted(c for route in routes for c in route)
            if served != list(range(1, inst.n)):
                ok = False
            for route in routes:
                if sum(inst.demands[c] for c in route) > inst.capacity + 1e-9:
                    ok = False
    for trial in range(500):
        n = 4 + rng.randrange(5)
        maxlen = 0.5 + rng.random() * 2.0
        inst = parse(random_op_doc(seed=trial, n=n, maxlen=maxlen))
        result = solve_op(op_eta, inst, ants=2, iterations=2, seed=trial)
        for _, path in result.iteration_history:
            checked += 1
            closed = path + [0]
            length = sum(inst.distances[a, b] for a, b in zip(closed, closed[1:]))
            if length > inst.maxlen + 1e-9:
                ok = False
    print(f"  accepted solutions checked: {checked}")
    ok = ok and checked >= 1000
    _verdict("rollout-feasibility", ok)
