import json

import pytest

from heurevo.journal import JournalError, JournalWriter, build_report, read_journal


def test_roundtrip_and_chain(tmp_path):
    path = tmp_path / "journal.jsonl"
    with JournalWriter(path) as journal:
        journal.write({"event": "meta", "run_id": "r1"})
        journal.write({"event": "round", "round": 1})
    records = read_journal(path)
    assert [r["event"] for r in records] == ["meta", "round"]
    assert records[0]["prev"] is None
    assert records[1]["prev"] is not None


def test_tampering_detected(tmp_path):
    path = tmp_path / "journal.jsonl"
    with JournalWriter(path) as journal:
        journal.write({"event": "meta", "run_id": "r1"})
        journal.write({"event": "round", "round": 1, "best_id": "a"})
    lines = path.read_text().splitlines()
    doctored = json.loads(lines[1])
    doctored["best_id"] = "b"
    lines[1] = json.dumps(doctored, separators=(",", ":"))
    path.write_text("".join(line + "\n" for line in lines))
    records = read_journal(path)  # same line edited in place keeps its own prev
    assert records[1]["best_id"] == "b"

    # but inserting a record breaks the chain for the follower
    with JournalWriter(path, resume=False) as journal:
        journal.write({"event": "meta", "run_id": "r1"})
        journal.write({"event": "round", "round": 1})
    lines = path.read_text().splitlines()
    lines.insert(1, lines[1])
    path.write_text("".join(line + "\n" for line in lines))
    with pytest.raises(JournalError):
        read_journal(path)


def test_resume_mode_continues_chain(tmp_path):
    path = tmp_path / "journal.jsonl"
    with JournalWriter(path) as journal:
        journal.write({"event": "meta", "run_id": "r1"})
    with JournalWriter(path, resume=True) as journal:
        journal.write({"event": "round", "round": 1})
    assert len(read_journal(path)) == 2


def test_corrupt_json_detected(tmp_path):
    path = tmp_path / "journal.jsonl"
    path.write_text('{"event": "meta", "prev": null}\n{oops\n')
    with pytest.raises(JournalError):
        read_journal(path)


def test_report_summarizes_run(tmp_path):
    path = tmp_path / "journal.jsonl"
    heuristic = {
        "id": "h0001-0", "idea": "i", "code": "def step(a, b):\n    return b",
        "performance": -10.0, "origin": {"operator": "injection", "parents": []}, "round": 1,
    }
    with JournalWriter(path) as journal:
        journal.write({"event": "meta", "run_id": "r1", "problem": "obp",
                       "reference": {"lb_mean": 8.0}})
        journal.write({"event": "prompt", "round": 1, "operator": "injection"})
        journal.write({"event": "response", "round": 1, "slot": 0,
                       "diagnosis": "feasible", "reward": 1.2, "advantage": 1.0,
                       "heuristic_id": "h0001-0", "heuristic": heuristic})
        journal.write({"event": "response", "round": 1, "slot": 1,
                       "diagnosis": "missing_idea", "reward": -1.0, "advantage": -1.0,
                       "heuristic_id": None})
        journal.write({"event": "round", "round": 1, "new_global_best": True,
                       "best_id": "h0001-0", "best_performance": -10.0, "pool_size": 1,
                       "collapse_counter": -1, "collapsed": False})
        journal.write({"event": "collapse", "round": 1, "kept_ids": ["h0001-0"]})
    report = build_report(read_journal(path))
    assert report["responses"] == 2
    assert report["diagnosis_counts"] == {"feasible": 1, "missing_idea": 1}
    assert report["collapses"] == [1]
    assert report["trajectory"][0]["gap"] == pytest.approx((10.0 - 8.0) / 8.0)
    assert report["best"]["id"] == "h0001-0"


def test_report_requires_meta(tmp_path):
    path = tmp_path / "journal.jsonl"
    with JournalWriter(path) as journal:
        journal.write({"event": "round", "round": 1})
    with pytest.raises(JournalError):
        build_report(read_journal(path))
