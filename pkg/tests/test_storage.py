from __future__ import annotations

import json

import pytest

from retrofuzz.storage import (
    CacheLog,
    CacheVersionError,
    DocumentError,
    MemoryCache,
    canonical_json,
    parse_kv,
    read_document,
    schema_tag,
    write_document,
)


class TestKv:
    def test_basic_types_and_comments(self):
        text = """
        # world parameters
        bugs = 200
        deterministic = true
        name = "demo"   # quoted
        plain = demo-value
        mix = [1, 2, 3]
        """
        got = parse_kv(text)
        assert got == {
            "bugs": 200,
            "deterministic": True,
            "name": "demo",
            "plain": "demo-value",
            "mix": [1, 2, 3],
        }

    def test_dotted_keys_nest(self):
        got = parse_kv("factor_mix.kernel_commit = 0.21\nfactor_mix.never_hidden = 0.32\n")
        assert got == {"factor_mix": {"kernel_commit": 0.21, "never_hidden": 0.32}}

    def test_bad_line_reports_location(self):
        with pytest.raises(DocumentError, match=r"spec\.kv:2"):
            parse_kv("a = 1\nnot a pair\n", source="spec.kv")

    def test_scalar_collision(self):
        with pytest.raises(DocumentError):
            parse_kv("a = 1\na.b = 2\n")


class TestDocuments:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "doc.json"
        write_document(path, "world", {"x": 1})
        doc = read_document(path, "world")
        assert doc["x"] == 1
        assert doc["schema"] == schema_tag("world")

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "doc.json"
        write_document(path, "world", {"x": 1})
        with pytest.raises(DocumentError, match="schema"):
            read_document(path, "report")

    def test_not_json(self, tmp_path):
        path = tmp_path / "doc.json"
        path.write_text("not json")
        with pytest.raises(DocumentError):
            read_document(path, "world")

    def test_canonical_json_is_bytewise_stable(self):
        a = canonical_json({"b": 1, "a": [1.5, 2]})
        b = canonical_json({"a": [1.5, 2], "b": 1})
        assert a == b


class TestCacheLog:
    def test_persist_and_reload(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        log = CacheLog(path)
        log.put_session("k1", {"status": "found", "time_to_find": 2.0})
        log.put_budget("bug-1", {"max_time": 10.0, "attempts": 3})
        again = CacheLog(path)
        assert again.get_session("k1") == {"status": "found", "time_to_find": 2.0}
        assert again.get_budget("bug-1") == {"max_time": 10.0, "attempts": 3}

    def test_append_only_lines(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        log = CacheLog(path)
        log.put_session("k1", {"status": "not_found"})
        log.put_session("k1", {"status": "found", "time_to_find": 1.0})
        lines = path.read_text().splitlines()
        assert len(lines) == 3  # header + two appends, last write wins
        assert CacheLog(path).get_session("k1")["status"] == "found"

    def test_version_mismatch_refused(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        path.write_text(json.dumps({"schema": "retrofuzz/cache@99"}) + "\n")
        with pytest.raises(CacheVersionError, match="clear the cache"):
            CacheLog(path)

    def test_clear_compacts_to_header(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        log = CacheLog(path)
        for i in range(5):
            log.put_session(f"k{i}", {"status": "not_found"})
        log.clear()
        assert len(path.read_text().splitlines()) == 1
        assert CacheLog(path).stats()["sessions"] == 0

    def test_memory_cache_stats(self):
        cache = MemoryCache()
        cache.put_session("k", {"status": "not_found"})
        assert cache.stats()["sessions"] == 1
