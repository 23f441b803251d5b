"""Regenerate the committed golden-run fixtures.

Writes corpus, scripted scores, seed heuristic and config under
tests/data/golden/, executes the run twice to prove byte-stability, and
freezes the resulting journal and trainer batch as the golden files.
Run from the repository root: python3 tools/make_golden_fixtures.py
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO))
sys.path.insert(0, str(REPO / "src"))

from heurevo.backends import BackendConfig
from heurevo.journal import read_journal
from heurevo.orchestrator import RunConfig, run

from tests.conftest import (
    MALFORMED_RESPONSE,
    MISSING_CODE_RESPONSE,
    MISSING_IDEA_RESPONSE,
    RANDOM_RESPONSE,
    SEED_HEURISTIC,
    obp_response,
    response_code,
    write_corpus,
    write_scores,
)

GOLDEN = REPO / "tests" / "data" / "golden"

DUP_SEED = obp_response("a reshuffled tight fit rule with identical behaviour", 0.77)
IMPROVEMENT_1 = obp_response("prefer bins whose leftover space stays usable", 1.31)
RUNTIME_BAD_1 = obp_response("divide by the leftover space without guarding zero", 2.03)
IMPROVEMENT_2 = obp_response("balance tightness against keeping large bins open", 1.47)
DEGRADATION = obp_response("score bins uniformly so placement is arbitrary", 3.19)
DUP_BEST = obp_response("an equivalent balance rule phrased differently", 4.21)
MID_PERFORMER = obp_response("tightness with a weak opening penalty", 5.33)
RUNTIME_BAD_2 = obp_response("index bins past the end of the capacity array", 6.47)

CORPUS = {
    1: [DUP_SEED, IMPROVEMENT_1],
    2: [MISSING_IDEA_RESPONSE, MISSING_CODE_RESPONSE],
    3: [MALFORMED_RESPONSE, RANDOM_RESPONSE],
    4: [RUNTIME_BAD_1, IMPROVEMENT_2],
    5: [DEGRADATION, MISSING_IDEA_RESPONSE],
    6: [MISSING_CODE_RESPONSE, MISSING_CODE_RESPONSE],
    7: [MISSING_IDEA_RESPONSE, MISSING_IDEA_RESPONSE],
    8: [DUP_BEST, MISSING_IDEA_RESPONSE],
    9: [MID_PERFORMER, MISSING_CODE_RESPONSE],
    10: [MISSING_CODE_RESPONSE, MISSING_CODE_RESPONSE],
    11: [MISSING_IDEA_RESPONSE, MALFORMED_RESPONSE],
    12: [RANDOM_RESPONSE, MISSING_CODE_RESPONSE],
    13: [MISSING_IDEA_RESPONSE, MISSING_IDEA_RESPONSE],
    14: [RUNTIME_BAD_2, MISSING_CODE_RESPONSE],
    15: [MISSING_IDEA_RESPONSE, MISSING_IDEA_RESPONSE],
    16: [MISSING_CODE_RESPONSE, MISSING_CODE_RESPONSE],
    17: [MISSING_IDEA_RESPONSE, MISSING_CODE_RESPONSE],
    18: [MALFORMED_RESPONSE, MISSING_IDEA_RESPONSE],
    19: [MISSING_IDEA_RESPONSE, MISSING_IDEA_RESPONSE],
    20: [MISSING_CODE_RESPONSE, MISSING_IDEA_RESPONSE],
}

SCORES = {
    SEED_HEURISTIC: {"g": -60.0},
    response_code(DUP_SEED): {"g": -60.0},
    response_code(IMPROVEMENT_1): {"g": -50.0},
    response_code(RUNTIME_BAD_1): {"error": "planted runtime failure"},
    response_code(IMPROVEMENT_2): {"g": -45.0},
    response_code(DEGRADATION): {"g": -80.0},
    response_code(DUP_BEST): {"g": -45.0},
    response_code(MID_PERFORMER): {"g": -55.0},
    response_code(RUNTIME_BAD_2): {"error": "planted index failure"},
}

CONFIG = {
    "problem": "obp",
    "rounds": 20,
    "group_size": 2,
    "population_size": 2,
    "delta0": 0.0005,
    "collapse_cap": 3,
    "seed": 7,
    "evaluator": "scripted",
}


def build_config(out_dir: Path) -> RunConfig:
    return RunConfig(
        problem=CONFIG["problem"],
        rounds=CONFIG["rounds"],
        group_size=CONFIG["group_size"],
        population_size=CONFIG["population_size"],
        delta0=CONFIG["delta0"],
        collapse_cap=CONFIG["collapse_cap"],
        seed=CONFIG["seed"],
        evaluator="scripted",
        scores_path=str(GOLDEN / "scores.json"),
        backend=BackendConfig(kind="replay", corpus_path=str(GOLDEN / "corpus.jsonl")),
        seed_heuristics=[str(GOLDEN / "seed_heuristic.py")],
        output_dir=str(out_dir),
    )


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    write_corpus(GOLDEN / "corpus.jsonl", CORPUS)
    write_scores(GOLDEN / "scores.json", SCORES)
    (GOLDEN / "seed_heuristic.py").write_text(SEED_HEURISTIC, encoding="utf-8")
    (GOLDEN / "config.json").write_text(json.dumps(CONFIG, indent=2) + "\n", encoding="utf-8")

    with tempfile.TemporaryDirectory() as tmp:
        out_a, out_b = Path(tmp) / "a", Path(tmp) / "b"
        best_a = run(build_config(out_a))
        best_b = run(build_config(out_b))
        journal_a = (out_a / "journal.jsonl").read_bytes()
        assert journal_a == (out_b / "journal.jsonl").read_bytes(), "journal not byte-stable"
        batch_a = (out_a / "batch.jsonl").read_bytes()
        assert batch_a == (out_b / "batch.jsonl").read_bytes(), "batch not byte-stable"
        assert best_a.id == best_b.id

        shutil.copy(out_a / "journal.jsonl", GOLDEN / "journal.golden.jsonl")
        shutil.copy(out_a / "batch.jsonl", GOLDEN / "batch.golden.jsonl")

        records = read_journal(out_a / "journal.jsonl")
        collapses = [r["round"] for r in records if r["event"] == "collapse"]
        diagnoses: dict[str, int] = {}
        for r in records:
            if r["event"] == "response":
                diagnoses[r["diagnosis"]] = diagnoses.get(r["diagnosis"], 0) + 1
        operators = [r["operator"] for r in records if r["event"] == "prompt"]
        print(f"best: {best_a.id} g={best_a.performance}")
        print(f"collapses at rounds: {collapses}")
        print(f"diagnosis counts: {json.dumps(diagnoses, sort_keys=True)}")
        print(f"operators: {operators}")
        rounds = [r for r in records if r["event"] == "round"]
        print("counter trace:", [r["collapse_counter"] for r in rounds])
        print(f"records: {len(records)}")


if __name__ == "__main__":
    main()
