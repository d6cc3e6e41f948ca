"""Bug records, retrospection reports, and the fuzzer-start epoch.

Data-only types shared by the oracle backend, the retrospection pipeline,
and the analytics stage.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

from . import storage
from .history import CommitAxis

#: Day the continuous fuzzer first reported a bug; the truncation floor for
#: the hidden delay. Environments older than this cannot be recreated.
SYZBOT_START = dt.date(2017, 7, 22)

CRASH_KINDS = ("memory_leak", "warning", "kasan", "race", "other")

FACTOR_CLASSES = (
    "description_commit",
    "syzkaller_commit",
    "kernel_commit",
    "sanitizer_commit",
    "blocking_bug",
    "never_hidden",
    "needs_manual_review",
)

REPORT_STATUSES = (
    "completed",
    "skipped_unreproducible",
    "never_describable",
    "unstable_range",
)

#: Directory labels used for location breakdowns.
DIRECTORY_LABELS = ("drivers", "fs", "kernel", "net", "other")


class RecordError(Exception):
    pass


def directory_label(crash_path: str) -> str:
    head = crash_path.split("/", 1)[0] if crash_path else ""
    return head if head in DIRECTORY_LABELS else "other"


@dataclass(frozen=True)
class BugRecord:
    """One bug as ingested: identity, dates, commits, reproducer, crash kind."""

    id: str
    title: str
    finding_commit: str
    finding_date: dt.date
    guilty_commits: tuple[str, ...]
    guilty_date: dt.date
    fix_commits: tuple[str, ...]
    reproducer_calls: tuple[str, ...]
    crash_kind: str
    config: str = ""
    crash_path: str = ""
    duplicate_group: str | None = None

    def __post_init__(self):
        if not self.guilty_commits:
            raise RecordError(f"{self.id}: needs at least one guilty commit")
        if self.crash_kind not in CRASH_KINDS:
            raise RecordError(f"{self.id}: unknown crash kind {self.crash_kind!r}")
        if self.guilty_date > self.finding_date:
            raise RecordError(
                f"{self.id}: guilty date {self.guilty_date} after finding date {self.finding_date}"
            )

    @property
    def directory(self) -> str:
        return directory_label(self.crash_path)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "finding_commit": self.finding_commit,
            "finding_date": self.finding_date.isoformat(),
            "guilty_commits": list(self.guilty_commits),
            "guilty_date": self.guilty_date.isoformat(),
            "fix_commits": list(self.fix_commits),
            "reproducer_calls": list(self.reproducer_calls),
            "crash_kind": self.crash_kind,
            "config": self.config,
            "crash_path": self.crash_path,
            "duplicate_group": self.duplicate_group,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BugRecord":
        return cls(
            id=doc["id"],
            title=doc.get("title", ""),
            finding_commit=doc["finding_commit"],
            finding_date=dt.date.fromisoformat(doc["finding_date"]),
            guilty_commits=tuple(doc["guilty_commits"]),
            guilty_date=dt.date.fromisoformat(doc["guilty_date"]),
            fix_commits=tuple(doc.get("fix_commits", ())),
            reproducer_calls=tuple(doc.get("reproducer_calls", ())),
            crash_kind=doc.get("crash_kind", "other"),
            config=doc.get("config", ""),
            crash_path=doc.get("crash_path", ""),
            duplicate_group=doc.get("duplicate_group"),
        )


def sanity_check_bug(bug: BugRecord, target_axis: CommitAxis) -> list[str]:
    """Date-order checks against the target axis; returns problem strings."""
    problems = []
    if bug.finding_commit not in target_axis:
        problems.append(f"finding commit {bug.finding_commit!r} not on target axis")
    for gc in bug.guilty_commits:
        if gc not in target_axis:
            problems.append(f"guilty commit {gc!r} not on target axis")
    if not problems:
        oldest_guilty = min(target_axis.by_id(g).day for g in bug.guilty_commits)
        if oldest_guilty != bug.guilty_date:
            problems.append(
                f"guilty_date {bug.guilty_date} does not match oldest guilty commit day {oldest_guilty}"
            )
        finding_day = target_axis.by_id(bug.finding_commit).day
        if finding_day != bug.finding_date:
            problems.append(
                f"finding_date {bug.finding_date} does not match finding commit day {finding_day}"
            )
    for fc in bug.fix_commits:
        if fc in target_axis and target_axis.by_id(fc).day < bug.finding_date:
            problems.append(f"fix commit {fc!r} predates the finding date")
    return problems


def load_bug_records(path) -> list[BugRecord]:
    doc = storage.read_document(path, "bug-records")
    return [BugRecord.from_doc(d) for d in doc.get("bugs", [])]


def dump_bug_records(bugs, path, provenance: dict | None = None) -> None:
    body = {"bugs": [b.to_doc() for b in bugs]}
    if provenance:
        body.update(provenance)
    storage.write_document(path, "bug-records", body)


@dataclass(frozen=True)
class ProbeResult:
    """One fuzzing session inside a retrospection, as logged in the report."""

    bug_id: str
    target_commit: str
    fuzzer_commit: str
    description_commit: str
    focused_hash: str
    status: str
    time_to_find: float | None
    unstable_reason: str | None
    observed_crashes: tuple[str, ...]
    cached: bool
    label: str

    def to_doc(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "target_commit": self.target_commit,
            "fuzzer_commit": self.fuzzer_commit,
            "description_commit": self.description_commit,
            "focused_hash": self.focused_hash,
            "status": self.status,
            "time_to_find": self.time_to_find,
            "unstable_reason": self.unstable_reason,
            "observed_crashes": list(self.observed_crashes),
            "cached": self.cached,
            "label": self.label,
        }


@dataclass
class RetrospectionReport:
    """Final output for one bug: the revealing commit, its class, and delays."""

    bug_id: str
    status: str
    revealing_commit: str | None = None
    revealing_axis: str | None = None
    factor_class: str | None = None
    revealing_date: dt.date | None = None
    revealing_range: tuple[str, str] | None = None
    unstable_ids: tuple[str, ...] = ()
    d1_days: int | None = None
    d2_days: int | None = None
    guilty_date: dt.date | None = None
    finding_date: dt.date | None = None
    directory: str = "other"
    session_log: tuple[ProbeResult, ...] = ()
    blocking_candidates: tuple[tuple[str, float], ...] = ()
    manual_flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status not in REPORT_STATUSES:
            raise RecordError(f"unknown report status {self.status!r}")

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def to_doc(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "status": self.status,
            "revealing_commit": self.revealing_commit,
            "revealing_axis": self.revealing_axis,
            "factor_class": self.factor_class,
            "revealing_date": self.revealing_date.isoformat() if self.revealing_date else None,
            "revealing_range": list(self.revealing_range) if self.revealing_range else None,
            "unstable_ids": list(self.unstable_ids),
            "d1_days": self.d1_days,
            "d2_days": self.d2_days,
            "guilty_date": self.guilty_date.isoformat() if self.guilty_date else None,
            "finding_date": self.finding_date.isoformat() if self.finding_date else None,
            "directory": self.directory,
            "session_log": [p.to_doc() for p in self.session_log],
            "blocking_candidates": [[b, r] for b, r in self.blocking_candidates],
            "manual_flags": list(self.manual_flags),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "RetrospectionReport":
        log = tuple(
            ProbeResult(
                bug_id=p["bug_id"],
                target_commit=p["target_commit"],
                fuzzer_commit=p["fuzzer_commit"],
                description_commit=p["description_commit"],
                focused_hash=p["focused_hash"],
                status=p["status"],
                time_to_find=p["time_to_find"],
                unstable_reason=p["unstable_reason"],
                observed_crashes=tuple(p["observed_crashes"]),
                cached=p["cached"],
                label=p["label"],
            )
            for p in doc.get("session_log", [])
        )
        return cls(
            bug_id=doc["bug_id"],
            status=doc["status"],
            revealing_commit=doc.get("revealing_commit"),
            revealing_axis=doc.get("revealing_axis"),
            factor_class=doc.get("factor_class"),
            revealing_date=(
                dt.date.fromisoformat(doc["revealing_date"]) if doc.get("revealing_date") else None
            ),
            revealing_range=(
                tuple(doc["revealing_range"]) if doc.get("revealing_range") else None
            ),
            unstable_ids=tuple(doc.get("unstable_ids", ())),
            d1_days=doc.get("d1_days"),
            d2_days=doc.get("d2_days"),
            guilty_date=(
                dt.date.fromisoformat(doc["guilty_date"]) if doc.get("guilty_date") else None
            ),
            finding_date=(
                dt.date.fromisoformat(doc["finding_date"]) if doc.get("finding_date") else None
            ),
            directory=doc.get("directory", "other"),
            session_log=log,
            blocking_candidates=tuple((b, r) for b, r in doc.get("blocking_candidates", [])),
            manual_flags=tuple(doc.get("manual_flags", ())),
        )


def load_report(path) -> RetrospectionReport:
    return RetrospectionReport.from_doc(storage.read_document(path, "report"))


def dump_report(report: RetrospectionReport, path, provenance: dict | None = None) -> None:
    body = report.to_doc()
    if provenance:
        body["provenance"] = provenance
    storage.write_document(path, "report", body)
