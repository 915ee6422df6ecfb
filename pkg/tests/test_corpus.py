import dataclasses
import json

import pytest

from telesum.corpus import CorpusEntry, get_entry, load_corpus, run_corpus
from telesum.expr import free_vars, generic_symbols

def test_shipped_corpus_loads():
    entries = load_corpus()
    assert len(entries) == 25
    assert len({e.id for e in entries}) == len(entries)
    assert all(e.domain in ("square", "triangle") for e in entries)


def test_entry_json_roundtrip():
    e = get_entry("Weighted.binom2.generic")
    assert CorpusEntry.from_json(json.loads(json.dumps(e.to_json()))) == e


def test_triangle_entries_gain_the_ordering_proviso():
    assert "a<=n" in get_entry("C2Vn").all_provisos()
    assert "a<=n" not in get_entry("C2.partial").all_provisos()


def test_constants_are_plugged_before_checking():
    lhs, rhs = get_entry("Weighted.binom2.generic").expressions()
    assert "c" not in free_vars(rhs)
    assert generic_symbols(rhs) == {"X", "Y"}


def test_diagonal_entry_counts_points():
    report = get_entry("C2Vn").verify(grid=(8, 8))
    assert report.passed
    assert report.points == 45


def test_broken_entry_is_caught():
    e = get_entry("C1.full")
    broken = dataclasses.replace(e, rhs="2^(n-1)*(n+3)")
    report = broken.verify(grid=(6, 6))
    assert report.status == "fail"


def test_unknown_id():
    with pytest.raises(KeyError):
        get_entry("NoSuchEntry")


def test_bad_header(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"format": "other", "version": 1}\n', encoding="utf-8")
    with pytest.raises(ValueError):
        load_corpus(path)


def test_duplicate_ids(tmp_path):
    line = json.dumps(get_entry("C1.full").to_json())
    path = tmp_path / "c.jsonl"
    path.write_text('{"format": "telesum-corpus", "version": 1}\n' + line + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_corpus(path)


def test_run_corpus_filter():
    results = list(run_corpus(grid=(5, 5), pattern="DoubleSum"))
    assert [e.id for e, _, _ in results] == ["DoubleSum.generic"]
    assert all(r.passed for _, r, _ in results)
