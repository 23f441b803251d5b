import json
from pathlib import Path

import pytest

from heurevo.backends import SignatureSpec, parse_heuristic
from heurevo.evaluation import code_digest

OBP_SIG = SignatureSpec(name="step", arity=2)


def obp_response(idea: str, marker: float, component: str | None = None) -> str:
    """A well-formed response: prose idea, then a fenced OBP step function."""
    prose = idea
    if component:
        prose += f" The new component {component} has been introduced."
    code = (
        "import numpy as np\n\n"
        "def step(item_size, remaining_capacities):\n"
        f"    return remaining_capacities * {marker}\n"
    )
    return f"{prose}\n\n```python\n{code}```\n"


def response_code(text: str) -> str:
    parsed = parse_heuristic(text, OBP_SIG)
    assert parsed.code is not None
    return parsed.code


MISSING_IDEA_RESPONSE = "```python\ndef step(item_size, remaining_capacities):\n    return remaining_capacities\n```\n"
MISSING_CODE_RESPONSE = "I would sort the bins by capacity but cannot write the code right now.\n"
MALFORMED_RESPONSE = (
    "A one-argument scorer.\n\n```python\ndef step(item_size):\n    return item_size\n```\n"
)
RANDOM_RESPONSE = (
    "Randomized tie-breaking.\n\n"
    "```python\nimport random\n\n"
    "def step(item_size, remaining_capacities):\n"
    "    return [random.random() for _ in remaining_capacities]\n```\n"
)

SEED_HEURISTIC = '''"""Score every bin by how tightly the item would fit into it."""

import numpy as np


def step(item_size: float, remaining_capacities: np.ndarray) -> np.ndarray:
    return item_size - remaining_capacities
'''


def write_corpus(path: Path, rounds: dict[int, list[str]]) -> None:
    with path.open("w", encoding="utf-8") as fp:
        for round_index, texts in sorted(rounds.items()):
            for slot, text in enumerate(texts):
                fp.write(json.dumps({"round": round_index, "slot": slot, "text": text}) + "\n")


def write_scores(path: Path, by_code: dict[str, dict]) -> None:
    path.write_text(json.dumps({code_digest(code): entry for code, entry in by_code.items()}))


@pytest.fixture
def seed_file(tmp_path):
    path = tmp_path / "seed_heuristic.py"
    path.write_text(SEED_HEURISTIC)
    return path
