import json
import subprocess
import sys
import threading

import pytest

from heurevo_worker.instances import parse_instance
from heurevo_worker.rng import Pcg32


def obp_doc(items, capacity=100.0):
    return {"version": 1, "kind": "obp", "capacity": capacity, "items": list(items)}


def tsp_doc(coords):
    return {"version": 1, "kind": "tsp", "coordinates": [list(c) for c in coords]}


def cvrp_doc(coords, demands, capacity):
    return {
        "version": 1,
        "kind": "cvrp",
        "coordinates": [list(c) for c in coords],
        "demands": list(demands),
        "capacity": capacity,
    }


def op_doc(coords, prizes, maxlen):
    return {
        "version": 1,
        "kind": "op",
        "coordinates": [list(c) for c in coords],
        "prizes": list(prizes),
        "maxlen": maxlen,
    }


def random_cvrp_doc(seed, n=8, capacity=15.0):
    rng = Pcg32(seed, stream=3)
    coords = [(rng.random(), rng.random()) for _ in range(n)]
    demands = [0.0] + [float(1 + rng.randrange(9)) for _ in range(n - 1)]
    return cvrp_doc(coords, demands, capacity)


def random_op_doc(seed, n=8, maxlen=1.5):
    rng = Pcg32(seed, stream=5)
    coords = [(rng.random(), rng.random()) for _ in range(n)]
    prizes = [0.0] + [rng.random() for _ in range(n - 1)]
    return op_doc(coords, prizes, maxlen)


def parse(doc):
    return parse_instance(doc)


BEST_FIT = (
    "import numpy as np\n"
    "def step(item_size, remaining_capacities):\n"
    "    return item_size - remaining_capacities\n"
)

INVERSE_DISTANCE_CVRP = (
    "import numpy as np\n"
    "def heuristics(distance_matrix, coordinates, demands, capacity):\n"
    "    return 1.0 / (distance_matrix + 1e-10)\n"
)

INVERSE_DISTANCE_OP = (
    "import numpy as np\n"
    "def heuristics(prize, distance, maxlen):\n"
    "    return (prize[np.newaxis, :] + 0.01) / (distance + 1e-10)\n"
)


def request(code, problem, instances, *, rid="r", seed=1, budget_s=30.0, params=None):
    merged = {"seed": seed}
    if params:
        merged.update(params)
    return {
        "version": 1,
        "id": rid,
        "code": code,
        "problem": problem,
        "instances": instances,
        "params": merged,
        "budget_s": budget_s,
    }


class WorkerProcess:
    """Parent-side driver: spawn, send one request per line, hard-kill on deadline."""

    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "heurevo_worker"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )

    @property
    def pid(self):
        return self.proc.pid

    def alive(self):
        return self.proc.poll() is None

    def send(self, record):
        self.proc.stdin.write(json.dumps(record) + "\n")
        self.proc.stdin.flush()

    def read_response(self, deadline_s):
        """Response dict, or None if the deadline passes (worker then killed)."""
        holder = []
        reader = threading.Thread(target=lambda: holder.append(self.proc.stdout.readline()))
        reader.daemon = True
        reader.start()
        reader.join(deadline_s)
        if reader.is_alive() or not holder or not holder[0]:
            self.kill()
            return None
        return json.loads(holder[0])

    def roundtrip(self, record, deadline_s):
        self.send(record)
        return self.read_response(deadline_s)

    def kill(self):
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.kill()


@pytest.fixture()
def worker():
    with WorkerProcess() as w:
        yield w
