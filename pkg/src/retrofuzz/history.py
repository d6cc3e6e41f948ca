"""Commit timelines: linearized axes, day representatives, toolchain and patch metadata.

Three axes describe a fuzzing environment: the target repository, the fuzzer
repository, and the syscall-description snapshots (a filtered view of the
fuzzer axis). Axes are immutable once built and always ordered newest to
oldest; ordering within a calendar day comes from an explicit ingestion
index, never from wall-clock timestamps.
"""

from __future__ import annotations

import datetime as dt
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

AXIS_KINDS = ("target", "fuzzer", "description")

UNSTABLE_REASONS = ("boot_failure", "lost_connection", "fuzzer_failure")


class HistoryError(Exception):
    pass


class CommitNotFoundError(HistoryError):
    pass


class MalformedGraphError(HistoryError):
    pass


class DayOutOfRangeError(HistoryError):
    pass


class CoverageError(HistoryError):
    """A date falls outside the toolchain table's covered span."""


@dataclass(frozen=True)
class Commit:
    """One commit: a calendar day plus a unique within-day ordering index.

    ``parents`` are in merge order; the first parent is the branch that was
    merged into, which is what keeps a linearized walk on the mainline.
    """

    id: str
    day: dt.date
    day_index: int
    parents: tuple[str, ...] = ()
    message: str = ""
    touched_paths: tuple[str, ...] = ()

    @property
    def sort_key(self) -> tuple[dt.date, int]:
        return (self.day, self.day_index)

    def to_row(self) -> list:
        return [
            self.id,
            self.day.isoformat(),
            self.day_index,
            list(self.parents),
            list(self.touched_paths),
            self.message,
        ]

    @classmethod
    def from_row(cls, row) -> "Commit":
        return cls(
            id=row[0],
            day=dt.date.fromisoformat(row[1]),
            day_index=int(row[2]),
            parents=tuple(row[3]),
            touched_paths=tuple(row[4]),
            message=row[5] if len(row) > 5 else "",
        )


class CommitAxis:
    """A dated, strictly ordered (newest -> oldest) sequence of commits."""

    def __init__(self, kind: str, commits, unstable: dict[str, str] | None = None):
        if kind not in AXIS_KINDS:
            raise HistoryError(f"unknown axis kind {kind!r}")
        commits = tuple(commits)
        if not commits:
            raise HistoryError("axis must contain at least one commit")
        self.kind = kind
        self.commits = commits
        self.unstable = dict(unstable or {})
        self._index: dict[str, int] = {}
        prev_key = None
        for pos, c in enumerate(commits):
            if c.id in self._index:
                raise HistoryError(f"duplicate commit id {c.id!r} on {kind} axis")
            if prev_key is not None and c.sort_key >= prev_key:
                raise HistoryError(
                    f"{kind} axis not strictly newest->oldest at {c.id!r} "
                    f"({c.sort_key} after {prev_key})"
                )
            self._index[c.id] = pos
            prev_key = c.sort_key
        for cid, reason in self.unstable.items():
            if cid not in self._index:
                raise HistoryError(f"unstable mark for unknown commit {cid!r}")
            if reason not in UNSTABLE_REASONS:
                raise HistoryError(f"unknown unstable reason {reason!r} for {cid!r}")
        # ascending views for bisect-based day lookups
        self._asc = commits[::-1]
        self._asc_keys = [(c.day, c.day_index) for c in self._asc]

    def __len__(self) -> int:
        return len(self.commits)

    def __iter__(self):
        return iter(self.commits)

    @property
    def newest(self) -> Commit:
        return self.commits[0]

    @property
    def oldest(self) -> Commit:
        return self.commits[-1]

    def index_of(self, commit_id: str) -> int:
        try:
            return self._index[commit_id]
        except KeyError:
            raise CommitNotFoundError(f"{commit_id!r} not on {self.kind} axis") from None

    def by_id(self, commit_id: str) -> Commit:
        return self.commits[self.index_of(commit_id)]

    def __contains__(self, commit_id: str) -> bool:
        return commit_id in self._index

    def is_unstable(self, commit_id: str) -> bool:
        return commit_id in self.unstable

    def at_or_after(self, commit_id: str, threshold_id: str) -> bool:
        """True when ``commit_id`` is the threshold commit or newer."""
        return self.index_of(commit_id) <= self.index_of(threshold_id)

    def filtered(self, commit_ids, kind: str = "description") -> "CommitAxis":
        """Sub-axis containing exactly ``commit_ids``, order preserved."""
        wanted = set(commit_ids)
        missing = wanted - set(self._index)
        if missing:
            raise CommitNotFoundError(f"ids not on {self.kind} axis: {sorted(missing)}")
        kept = [c for c in self.commits if c.id in wanted]
        return CommitAxis(kind, kept, {k: v for k, v in self.unstable.items() if k in wanted})


def linearize_first_parent(graph, head: str, kind: str = "target") -> CommitAxis:
    """Walk first parents from ``head`` to a root and return the path as an axis.

    The first parent of a merge is the branch merged into, so the walk stays
    on the mainline. A repeated id means the parent links form a cycle.
    """
    by_id = {c.id: c for c in graph}
    if head not in by_id:
        raise CommitNotFoundError(f"head {head!r} not in graph")
    path: list[Commit] = []
    seen: set[str] = set()
    cur: str | None = head
    while cur is not None:
        if cur in seen:
            raise MalformedGraphError(f"cycle through {cur!r}")
        node = by_id.get(cur)
        if node is None:
            raise CommitNotFoundError(f"parent {cur!r} unresolved")
        seen.add(cur)
        path.append(node)
        cur = node.parents[0] if node.parents else None
    return CommitAxis(kind, path)


def representative_for_day(axis: CommitAxis, day: dt.date) -> Commit:
    """The last commit of ``day``, or of the nearest earlier populated day.

    The fallback keeps the reconstructed environment no newer than reality:
    on a quiet day the fuzzer would still have been running yesterday's build.
    """
    pos = bisect_right(axis._asc_keys, (day, 10**9)) - 1
    if pos < 0:
        raise DayOutOfRangeError(f"{day.isoformat()} precedes the {axis.kind} axis")
    return axis._asc[pos]


def commits_between(axis: CommitAxis, older: str, newer: str):
    """Inclusive sub-sequence from ``newer`` down to ``older`` (newest first)."""
    i_new = axis.index_of(newer)
    i_old = axis.index_of(older)
    if i_new > i_old:
        raise HistoryError(f"inverted range: {older!r} is newer than {newer!r}")
    return axis.commits[i_new : i_old + 1]


def nearest_stable(axis: CommitAxis, start: str, max_radius: int) -> Commit | None:
    """Closest commit to ``start`` (by linearized distance) not marked unstable.

    Offsets are tried alternating -1, +1, -2, +2, ... up to ``max_radius``;
    None means everything within the radius is unstable.
    """
    i = axis.index_of(start)
    if not axis.is_unstable(start):
        return axis.commits[i]
    n = len(axis.commits)
    for r in range(1, max_radius + 1):
        for off in (-r, r):
            j = i + off
            if 0 <= j < n and not axis.is_unstable(axis.commits[j].id):
                return axis.commits[j]
    return None


@dataclass(frozen=True)
class ToolchainTable:
    """Date ranges (half-open, contiguous) mapped to toolchain identifiers.

    A boundary day belongs to the range that starts on it, i.e. the newer one.
    """

    entries: tuple[tuple[dt.date, dt.date, str], ...]

    def __post_init__(self):
        if not self.entries:
            raise HistoryError("toolchain table is empty")
        prev_end = None
        for start, end, ident in self.entries:
            if start >= end:
                raise HistoryError(f"empty toolchain range for {ident!r}")
            if prev_end is not None and start != prev_end:
                raise HistoryError(f"toolchain ranges not contiguous at {start.isoformat()}")
            prev_end = end

    @classmethod
    def from_rows(cls, rows) -> "ToolchainTable":
        entries = tuple(
            (dt.date.fromisoformat(str(a)), dt.date.fromisoformat(str(b)), str(ident))
            for a, b, ident in rows
        )
        return cls(entries)

    def to_rows(self) -> list:
        return [[a.isoformat(), b.isoformat(), ident] for a, b, ident in self.entries]

    @property
    def span(self) -> tuple[dt.date, dt.date]:
        return (self.entries[0][0], self.entries[-1][1])

    def validate_covers(self, start: dt.date, end: dt.date) -> None:
        lo, hi = self.span
        if start < lo or end > hi:
            raise CoverageError(
                f"toolchain table covers {lo.isoformat()}..{hi.isoformat()}, "
                f"axis needs {start.isoformat()}..{end.isoformat()}"
            )


def toolchain_for_date(table: ToolchainTable, day: dt.date) -> str:
    for start, end, ident in table.entries:
        if start <= day < end:
            return ident
    raise CoverageError(f"{day.isoformat()} not covered by toolchain table")


@dataclass(frozen=True)
class PatchRule:
    axis_kind: str
    older_id: str
    newer_id: str
    patch_id: str


@dataclass(frozen=True)
class PatchRuleTable:
    """Patch metadata: commit-id ranges per axis that require a known patch.

    Rules are metadata only; matching a rule sets a flag on the environment
    for the oracle to consult. No source is ever mutated.
    """

    rules: tuple[PatchRule, ...] = ()

    @classmethod
    def from_rows(cls, rows) -> "PatchRuleTable":
        return cls(tuple(PatchRule(str(k), str(o), str(n), str(p)) for k, o, n, p in rows))

    def to_rows(self) -> list:
        return [[r.axis_kind, r.older_id, r.newer_id, r.patch_id] for r in self.rules]

    def validate_against(self, axes: dict[str, CommitAxis]) -> None:
        for rule in self.rules:
            axis = axes.get(rule.axis_kind)
            if axis is None:
                raise HistoryError(f"patch rule {rule.patch_id!r}: no {rule.axis_kind} axis")
            if axis.index_of(rule.newer_id) > axis.index_of(rule.older_id):
                raise HistoryError(f"patch rule {rule.patch_id!r}: inverted commit range")

    def patches_for(self, axes: dict[str, CommitAxis], coords: dict[str, str]) -> frozenset[str]:
        hit = set()
        for rule in self.rules:
            commit_id = coords.get(rule.axis_kind)
            if commit_id is None:
                continue
            axis = axes[rule.axis_kind]
            pos = axis.index_of(commit_id)
            if axis.index_of(rule.newer_id) <= pos <= axis.index_of(rule.older_id):
                hit.add(rule.patch_id)
        return frozenset(hit)


def load_axis_file(path, kind: str) -> CommitAxis:
    """Read a line-delimited axis file.

    Record format: ``id|date|day_index|parent_ids(comma)|touched_paths(comma)``
    with an optional trailing ``|message`` field. Blank lines and ``#``
    comments are skipped.
    """
    path = Path(path)
    commits = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) < 5:
            raise HistoryError(f"{path}:{lineno}: expected at least 5 '|' fields")
        try:
            day = dt.date.fromisoformat(parts[1])
            day_index = int(parts[2])
        except ValueError as exc:
            raise HistoryError(f"{path}:{lineno}: {exc}") from exc
        parents = tuple(p for p in parts[3].split(",") if p)
        touched = tuple(p for p in parts[4].split(",") if p)
        message = parts[5] if len(parts) > 5 else ""
        commits.append(Commit(parts[0], day, day_index, parents, message, touched))
    return CommitAxis(kind, commits)


def dump_axis_file(axis: CommitAxis, path) -> None:
    lines = []
    for c in axis.commits:
        lines.append(
            "|".join(
                [
                    c.id,
                    c.day.isoformat(),
                    str(c.day_index),
                    ",".join(c.parents),
                    ",".join(c.touched_paths),
                    c.message,
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")
