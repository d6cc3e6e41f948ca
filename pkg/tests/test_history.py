from __future__ import annotations

import datetime as dt
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_axis
from helpers import make_merge_dag, recursive_first_parent
from retrofuzz.history import (
    Commit,
    CommitAxis,
    CommitNotFoundError,
    CoverageError,
    DayOutOfRangeError,
    HistoryError,
    MalformedGraphError,
    PatchRuleTable,
    ToolchainTable,
    commits_between,
    dump_axis_file,
    linearize_first_parent,
    load_axis_file,
    nearest_stable,
    representative_for_day,
    toolchain_for_date,
)

D = dt.date


def day(s: str) -> dt.date:
    return dt.date.fromisoformat(s)


class TestLinearize:
    def test_linear_chain(self):
        c1 = Commit("c1", D(2020, 1, 1), 0)
        c2 = Commit("c2", D(2020, 1, 2), 0, ("c1",))
        c3 = Commit("c3", D(2020, 1, 3), 0, ("c2",))
        axis = linearize_first_parent([c1, c2, c3], "c3")
        assert [c.id for c in axis] == ["c3", "c2", "c1"]

    def test_merge_follows_first_parent(self):
        # the first parent of a merge is the branch merged into
        a = Commit("A", D(2020, 1, 1), 0)
        b = Commit("B", D(2020, 1, 1), 1, ("A",))
        m = Commit("M", D(2020, 1, 2), 0, ("A", "B"))
        axis = linearize_first_parent([a, b, m], "M")
        ids = [c.id for c in axis]
        assert "A" in ids and "B" not in ids
        assert ids == ["M", "A"]

    def test_matches_recursive_walk_on_random_dags(self):
        rng = random.Random(1234)
        for _ in range(5):
            commits, head, expected = make_merge_dag(rng, mainline_len=200)
            axis = linearize_first_parent(commits, head)
            assert [c.id for c in axis] == expected
            by_id = {c.id: c for c in commits}
            assert [c.id for c in axis] == recursive_first_parent(by_id, head)

    def test_missing_head(self):
        with pytest.raises(CommitNotFoundError):
            linearize_first_parent([Commit("x", D(2020, 1, 1), 0)], "nope")

    def test_cycle_detected(self):
        a = Commit("a", D(2020, 1, 2), 0, ("b",))
        b = Commit("b", D(2020, 1, 1), 0, ("a",))
        with pytest.raises(MalformedGraphError):
            linearize_first_parent([a, b], "a")

    def test_unresolved_parent(self):
        a = Commit("a", D(2020, 1, 2), 0, ("ghost",))
        with pytest.raises(CommitNotFoundError):
            linearize_first_parent([a], "a")

    def test_deterministic(self):
        rng = random.Random(77)
        commits, head, _ = make_merge_dag(rng, mainline_len=60)
        once = [c.id for c in linearize_first_parent(commits, head)]
        again = [c.id for c in linearize_first_parent(list(reversed(commits)), head)]
        assert once == again


class TestAxisInvariants:
    def test_duplicate_id_rejected(self):
        with pytest.raises(HistoryError):
            CommitAxis(
                "target",
                [Commit("x", D(2020, 1, 2), 0), Commit("x", D(2020, 1, 1), 0)],
            )

    def test_order_must_be_strict(self):
        with pytest.raises(HistoryError):
            CommitAxis(
                "target",
                [Commit("a", D(2020, 1, 1), 0), Commit("b", D(2020, 1, 2), 0)],
            )

    def test_unknown_kind(self):
        with pytest.raises(HistoryError):
            CommitAxis("nonsense", [Commit("a", D(2020, 1, 1), 0)])

    def test_filtered_is_subsequence(self):
        axis = make_axis(
            "fuzzer",
            [("a", "2020-01-01", 0), ("b", "2020-01-02", 0), ("c", "2020-01-03", 0)],
        )
        sub = axis.filtered(["a", "c"])
        assert sub.kind == "description"
        assert [c.id for c in sub] == ["c", "a"]
        assert set(c.id for c in sub) <= set(c.id for c in axis)

    def test_filtered_unknown_id(self):
        axis = make_axis("fuzzer", [("a", "2020-01-01", 0)])
        with pytest.raises(CommitNotFoundError):
            axis.filtered(["a", "zz"])


class TestRepresentativeForDay:
    def test_last_of_day_wins(self):
        axis = make_axis(
            "target",
            [("a", "2020-01-05", 0), ("b", "2020-01-05", 1), ("c", "2020-01-05", 2)],
        )
        assert representative_for_day(axis, day("2020-01-05")).id == "c"

    def test_empty_day_falls_back_to_previous(self):
        axis = make_axis(
            "target",
            [("a", "2020-01-01", 0), ("b", "2020-01-01", 1), ("c", "2020-01-04", 0)],
        )
        assert representative_for_day(axis, day("2020-01-03")).id == "b"

    def test_day_before_axis(self):
        axis = make_axis("target", [("a", "2020-01-10", 0)])
        with pytest.raises(DayOutOfRangeError):
            representative_for_day(axis, day("2020-01-09"))

    def test_matches_linear_scan_over_fifty_days(self):
        rng = random.Random(9)
        rows = []
        serial = 0
        start = D(2021, 3, 1)
        for i in range(50):
            if rng.random() < 0.7:
                for idx in range(rng.randrange(1, 4)):
                    rows.append((f"c{serial:03d}", (start + dt.timedelta(days=i)).isoformat(), idx))
                    serial += 1
        axis = make_axis("target", rows)
        commits_asc = list(reversed(axis.commits))
        for i in range(50):
            d = start + dt.timedelta(days=i)
            expect = None
            for c in commits_asc:  # linear scan oracle
                if c.day <= d:
                    expect = c
            if expect is None:
                with pytest.raises(DayOutOfRangeError):
                    representative_for_day(axis, d)
            else:
                assert representative_for_day(axis, d) is expect

    @given(offset=st.integers(min_value=0, max_value=80), gap=st.integers(min_value=0, max_value=20))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_day(self, offset, gap):
        rows = [(f"c{i}", (D(2020, 1, 1) + dt.timedelta(days=3 * i)).isoformat(), 0) for i in range(30)]
        axis = make_axis("target", rows)
        d1 = D(2020, 1, 1) + dt.timedelta(days=offset)
        d2 = d1 + dt.timedelta(days=gap)
        a = representative_for_day(axis, d1)
        b = representative_for_day(axis, d2)
        assert axis.index_of(b.id) <= axis.index_of(a.id)


class TestCommitsBetween:
    def _axis(self, n=30):
        return make_axis(
            "target",
            [(f"c{i:03d}", (D(2020, 1, 1) + dt.timedelta(days=i)).isoformat(), 0) for i in range(n)],
        )

    def test_degenerate_single(self):
        axis = self._axis()
        got = commits_between(axis, "c010", "c010")
        assert [c.id for c in got] == ["c010"]

    def test_full_span(self):
        axis = self._axis(5)
        got = commits_between(axis, axis.oldest.id, axis.newest.id)
        assert list(got) == list(axis.commits)

    def test_random_pairs_match_slice_oracle(self):
        rng = random.Random(4)
        axis = make_axis(
            "target",
            [(f"c{i:04d}", (D(2019, 1, 1) + dt.timedelta(days=i // 2)).isoformat(), i % 2) for i in range(500)],
        )
        ordered = list(axis.commits)
        for _ in range(200):
            i, j = sorted(rng.sample(range(500), 2))
            got = commits_between(axis, ordered[j].id, ordered[i].id)
            assert list(got) == ordered[i : j + 1]

    def test_off_axis(self):
        axis = self._axis(3)
        with pytest.raises(CommitNotFoundError):
            commits_between(axis, "zz", "c001")

    def test_inverted(self):
        axis = self._axis(3)
        with pytest.raises(HistoryError):
            commits_between(axis, "c002", "c000")


class TestNearestStable:
    def _axis(self, n, unstable_ids):
        commits = [
            Commit(f"c{i:03d}", D(2020, 1, 1) + dt.timedelta(days=n - i), 0)
            for i in range(n)
        ]
        return CommitAxis("target", commits, {u: "boot_failure" for u in unstable_ids})

    def test_stable_start_returns_itself(self):
        axis = self._axis(5, [])
        assert nearest_stable(axis, "c002", 3).id == "c002"

    def test_prefers_newer_neighbor_first(self):
        axis = self._axis(5, ["c002"])
        assert nearest_stable(axis, "c002", 3).id == "c001"

    def test_all_unstable_within_radius(self):
        axis = self._axis(7, [f"c{i:03d}" for i in range(7)])
        assert nearest_stable(axis, "c003", 2) is None

    def test_matches_exhaustive_ring_search(self):
        rng = random.Random(11)
        for _ in range(30):
            n = rng.randrange(5, 40)
            mask = [cid for cid in (f"c{i:03d}" for i in range(n)) if rng.random() < 0.4]
            axis = self._axis(n, mask)
            start_i = rng.randrange(n)
            radius = rng.randrange(1, 6)
            got = nearest_stable(axis, f"c{start_i:03d}", radius)
            # exhaustive oracle: smallest |distance|, newer side on ties
            best = None
            for j, c in enumerate(axis.commits):
                if axis.is_unstable(c.id) or abs(j - start_i) > radius:
                    continue
                key = (abs(j - start_i), 0 if j <= start_i else 1)
                if best is None or key < best[0]:
                    best = (key, c)
            if best is None:
                assert got is None
            else:
                assert got is best[1]


class TestToolchainTable:
    def test_boundary_day_owned_by_newer_range(self):
        table = ToolchainTable.from_rows(
            [["2018-01-01", "2019-01-01", "gcc-7"], ["2019-01-01", "2020-01-01", "gcc-8"]]
        )
        assert toolchain_for_date(table, day("2019-01-01")) == "gcc-8"
        assert toolchain_for_date(table, day("2018-12-31")) == "gcc-7"

    def test_single_range(self):
        table = ToolchainTable.from_rows([["2018-01-01", "2020-01-01", "gcc-9"]])
        for d in ("2018-01-01", "2019-06-15", "2019-12-31"):
            assert toolchain_for_date(table, day(d)) == "gcc-9"

    def test_uncovered_day(self):
        table = ToolchainTable.from_rows([["2018-01-01", "2019-01-01", "gcc-7"]])
        with pytest.raises(CoverageError):
            toolchain_for_date(table, day("2019-01-01"))

    def test_validated_at_load(self):
        with pytest.raises(HistoryError):
            ToolchainTable.from_rows(
                [["2018-01-01", "2019-01-01", "a"], ["2019-06-01", "2020-01-01", "b"]]
            )
        with pytest.raises(HistoryError):
            ToolchainTable.from_rows([["2019-01-01", "2019-01-01", "empty"]])

    def test_random_tables_match_linear_scan(self):
        rng = random.Random(17)
        for _ in range(25):
            start = D(2017, 1, 1)
            cuts = sorted(rng.sample(range(1, 1000), rng.randrange(1, 6)))
            bounds = [start] + [start + dt.timedelta(days=c) for c in cuts] + [start + dt.timedelta(days=1100)]
            rows = [
                [bounds[i].isoformat(), bounds[i + 1].isoformat(), f"tc{i}"]
                for i in range(len(bounds) - 1)
            ]
            table = ToolchainTable.from_rows(rows)
            for _ in range(40):
                d = start + dt.timedelta(days=rng.randrange(1100))
                expect = next(
                    ident
                    for s, e, ident in table.entries
                    if s <= d < e
                )
                assert toolchain_for_date(table, d) == expect

    def test_covers_validation(self):
        table = ToolchainTable.from_rows([["2018-01-01", "2019-01-01", "gcc-7"]])
        table.validate_covers(day("2018-02-01"), day("2018-11-30"))
        with pytest.raises(CoverageError):
            table.validate_covers(day("2017-01-01"), day("2018-06-01"))


class TestPatchRules:
    def _axes(self):
        target = make_axis(
            "target",
            [(f"t{i}", (D(2020, 1, 1) + dt.timedelta(days=i)).isoformat(), 0) for i in range(10)],
        )
        fuzzer = make_axis(
            "fuzzer",
            [(f"f{i}", (D(2020, 1, 1) + dt.timedelta(days=i)).isoformat(), 0) for i in range(10)],
        )
        return {"target": target, "fuzzer": fuzzer}

    def test_patch_applies_inside_range(self):
        axes = self._axes()
        rules = PatchRuleTable.from_rows([["target", "t2", "t6", "page-size"]])
        rules.validate_against(axes)
        assert rules.patches_for(axes, {"target": "t4", "fuzzer": "f4"}) == {"page-size"}
        assert rules.patches_for(axes, {"target": "t8", "fuzzer": "f4"}) == frozenset()
        assert rules.patches_for(axes, {"target": "t2", "fuzzer": "f0"}) == {"page-size"}

    def test_inverted_range_rejected(self):
        axes = self._axes()
        rules = PatchRuleTable.from_rows([["target", "t6", "t2", "bad"]])
        with pytest.raises(HistoryError):
            rules.validate_against(axes)


class TestAxisFile:
    def test_round_trip(self, tmp_path):
        axis = make_axis(
            "target",
            [("a", "2020-01-01", 0), ("b", "2020-01-02", 0), ("c", "2020-01-02", 1)],
        )
        path = tmp_path / "axis.txt"
        dump_axis_file(axis, path)
        loaded = load_axis_file(path, "target")
        assert [c.id for c in loaded] == [c.id for c in axis]
        assert [c.day for c in loaded] == [c.day for c in axis]

    def test_message_and_paths_survive(self, tmp_path):
        c = Commit("x", D(2021, 5, 5), 0, ("p1", "p2"), "kasan: add check", ("mm/kasan/report.c",))
        axis = CommitAxis("target", [c])
        path = tmp_path / "axis.txt"
        dump_axis_file(axis, path)
        loaded = load_axis_file(path, "target")
        got = loaded.by_id("x")
        assert got.parents == ("p1", "p2")
        assert got.touched_paths == ("mm/kasan/report.c",)
        assert got.message == "kasan: add check"

    def test_bad_line_reports_location(self, tmp_path):
        path = tmp_path / "axis.txt"
        path.write_text("only|three|fields\n")
        with pytest.raises(HistoryError, match=r"axis\.txt:1"):
            load_axis_file(path, "target")
