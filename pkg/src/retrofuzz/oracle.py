"""Fuzzing-session oracle: the environment/budget/outcome contract and the
synthetic-world backend with known ground truth.

A session either finds the bug, does not, or lands on an unstable
environment. The synthetic world decides findability by coordinate
dominance: the environment must be at or after every ground-truth threshold
commit (description, target, fuzzer), and a blocked bug additionally needs
its blocker's fix commit. Given an explicit seed every session is pure, so
callers may run sessions concurrently.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass
from statistics import fmean, pstdev

from .history import (
    Commit,
    CommitAxis,
    PatchRuleTable,
    ToolchainTable,
    UNSTABLE_REASONS,
)
from .records import BugRecord
from .syzlang import DescriptionCorpus, parse_descriptions

log = logging.getLogger(__name__)

TRIAL_MINUTES = 30.0
TRIAL_COUNT = 3
MIN_BUDGET_MINUTES = 10.0
#: Calibrated budgets clamp here; mean+stddev occasionally lands just past 30.
MAX_BUDGET_MINUTES = 35.0
#: A trial find at or beyond this fraction of the trial window escalates the
#: budget to the safe maximum with five attempts.
SLOW_FIND_FRACTION = 0.8

DEFAULT_VM_COUNT = 10


class OracleError(Exception):
    pass


class UnknownBugError(OracleError):
    pass


class WorldSpecError(OracleError):
    pass


@dataclass(frozen=True)
class FuzzEnvironment:
    """One reconstructed fuzzing environment: three dated commit coordinates.

    The description coordinate is the fuzzer commit whose snapshot produced
    the focused set; the hash identifies the focused content for caching.
    """

    target_commit: str
    fuzzer_commit: str
    description_commit: str
    focused_hash: str
    toolchain: str = ""
    config: str = ""
    patches: frozenset[str] = frozenset()
    seeded_reproducer: bool = True
    vm_count: int = DEFAULT_VM_COUNT

    def cache_key(self, bug_id: str) -> str:
        return f"{bug_id}|{self.target_commit}|{self.fuzzer_commit}|{self.focused_hash}"


@dataclass(frozen=True)
class FuzzBudget:
    max_time: float
    attempts: int

    def __post_init__(self):
        if self.max_time <= 0 or self.attempts < 1:
            raise OracleError(f"bad budget ({self.max_time}, {self.attempts})")


TRIAL_BUDGET = FuzzBudget(TRIAL_MINUTES, 1)
ESCALATED_BUDGET = FuzzBudget(TRIAL_MINUTES, 5)


@dataclass(frozen=True)
class SessionOutcome:
    status: str  # found | not_found | unstable
    time_to_find: float | None = None
    unstable_reason: str | None = None
    observed_crashes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status == "found" and self.time_to_find is None:
            raise OracleError("found outcome needs a time_to_find")
        if self.status == "unstable" and self.unstable_reason is None:
            raise OracleError("unstable outcome needs a reason")

    def to_doc(self) -> dict:
        return {
            "status": self.status,
            "time_to_find": self.time_to_find,
            "unstable_reason": self.unstable_reason,
            "observed_crashes": list(self.observed_crashes),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SessionOutcome":
        return cls(
            status=doc["status"],
            time_to_find=doc.get("time_to_find"),
            unstable_reason=doc.get("unstable_reason"),
            observed_crashes=tuple(doc.get("observed_crashes", ())),
        )


@dataclass(frozen=True)
class BugTruth:
    """Ground truth for one synthetic bug.

    ``required`` maps axis kind to the oldest commit that satisfies that
    axis; the revealing axis/commit is the chronologically last of them.
    ``mean_find_minutes`` is the expected find time at the reference VM
    count; ``d2_scale_days`` parameterizes the days-to-find model used by
    the VM-scaling study.
    """

    bug_id: str
    guilty_commit: str
    revealing_axis: str
    revealing_commit: str
    factor: str
    required: dict[str, str]
    find_probability: float
    mean_find_minutes: float
    crash_kind: str
    d2_scale_days: float
    blocking_bug_id: str | None = None
    block_probability: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.find_probability <= 1.0):
            raise OracleError(f"{self.bug_id}: find probability must be in (0, 1]")

    def to_doc(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "guilty_commit": self.guilty_commit,
            "revealing_axis": self.revealing_axis,
            "revealing_commit": self.revealing_commit,
            "factor": self.factor,
            "required": dict(self.required),
            "find_probability": self.find_probability,
            "mean_find_minutes": self.mean_find_minutes,
            "crash_kind": self.crash_kind,
            "d2_scale_days": self.d2_scale_days,
            "blocking_bug_id": self.blocking_bug_id,
            "block_probability": self.block_probability,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BugTruth":
        return cls(
            bug_id=doc["bug_id"],
            guilty_commit=doc["guilty_commit"],
            revealing_axis=doc["revealing_axis"],
            revealing_commit=doc["revealing_commit"],
            factor=doc["factor"],
            required=dict(doc["required"]),
            find_probability=doc["find_probability"],
            mean_find_minutes=doc["mean_find_minutes"],
            crash_kind=doc["crash_kind"],
            d2_scale_days=doc["d2_scale_days"],
            blocking_bug_id=doc.get("blocking_bug_id"),
            block_probability=doc.get("block_probability", 0.0),
        )


class WorldSnapshots:
    """Lazy description snapshots for a synthetic world.

    The corpus only changes at description-event commits; every other fuzzer
    commit maps to the snapshot of the nearest older event, and identical
    snapshots are shared objects so downstream diffing can short-circuit.
    Individual declarations are parsed once and the resulting entities shared
    between snapshots.
    """

    def __init__(self, fuzzer_axis: CommitAxis, events, legacy_inout: bool = False):
        # events: list of (fuzzer_commit_id, {entity_name: decl_text}),
        # ordered oldest -> newest
        self._axis = fuzzer_axis
        self._events = events
        self._legacy = legacy_inout
        self._snapshots: dict[int, DescriptionCorpus] = {}
        self._decl_totals: list[dict[str, str]] = []
        acc: dict[str, str] = {}
        for _, decls in events:
            acc = dict(acc)
            acc.update(decls)
            self._decl_totals.append(acc)
        self._entity_cache: dict[str, object] = {}
        # event index applicable at each axis position (axis newest->oldest)
        event_pos = {fuzzer_axis.index_of(cid): i for i, (cid, _) in enumerate(events)}
        self._event_at: list[int] = [0] * len(fuzzer_axis)
        current = -1
        for pos in range(len(fuzzer_axis) - 1, -1, -1):  # oldest -> newest
            if pos in event_pos:
                current = event_pos[pos]
            self._event_at[pos] = current

    def event_index_for(self, commit_id: str) -> int:
        """Last event at or before the commit; -1 when none applies yet."""
        return self._event_at[self._axis.index_of(commit_id)]

    def _entity(self, decl_text: str):
        ent = self._entity_cache.get(decl_text)
        if ent is None:
            one = parse_descriptions([("<decl>", decl_text)], legacy_inout=self._legacy)
            entities = list(one.all_entities())
            if len(entities) != 1:
                raise OracleError(f"expected one declaration, got {len(entities)}: {decl_text!r}")
            ent = entities[0]
            self._entity_cache[decl_text] = ent
        return ent

    def corpus_at(self, commit_id: str) -> DescriptionCorpus:
        idx = self.event_index_for(commit_id)
        if idx not in self._snapshots:
            corpus = DescriptionCorpus(legacy_inout=self._legacy)
            if idx >= 0:
                for name in sorted(self._decl_totals[idx]):
                    corpus.add(self._entity(self._decl_totals[idx][name]))
                corpus.check_references()
            self._snapshots[idx] = corpus
        return self._snapshots[idx]


class SyntheticWorld:
    """A complete synthetic campaign: axes, descriptions, bugs, ground truth."""

    def __init__(
        self,
        target_axis: CommitAxis,
        fuzzer_axis: CommitAxis,
        description_events,
        bugs: dict[str, BugTruth],
        records: dict[str, BugRecord],
        toolchains: ToolchainTable,
        patch_rules: PatchRuleTable,
        knee_vms: int,
        deterministic: bool,
        seed: int,
        unstable: dict[str, frozenset[str]] | None = None,
        legacy_inout: bool = False,
    ):
        self.target_axis = target_axis
        self.fuzzer_axis = fuzzer_axis
        self.description_events = description_events
        self.bugs = bugs
        self.records = records
        self.toolchains = toolchains
        self.patch_rules = patch_rules
        self.knee_vms = knee_vms
        self.vm_reference = DEFAULT_VM_COUNT
        self.deterministic = deterministic
        self.seed = seed
        self.unstable = unstable or {}
        self.legacy_inout = legacy_inout
        self.snapshots = WorldSnapshots(fuzzer_axis, description_events, legacy_inout)
        self.sessions_run = 0  # observability only

    @property
    def description_commit_ids(self) -> list[str]:
        return [cid for cid, _ in self.description_events]

    def axes(self) -> dict[str, CommitAxis]:
        return {"target": self.target_axis, "fuzzer": self.fuzzer_axis}

    def _axis_for(self, kind: str) -> CommitAxis:
        return self.target_axis if kind == "target" else self.fuzzer_axis

    def env_is_unstable(self, env: FuzzEnvironment) -> bool:
        coords = {
            "target": env.target_commit,
            "fuzzer": env.fuzzer_commit,
            "description": env.description_commit,
        }
        for kind, cid in coords.items():
            marks = self.unstable.get("fuzzer" if kind == "description" else kind)
            if marks and cid in marks:
                return True
        return False

    def dominates(self, env: FuzzEnvironment, truth: BugTruth) -> bool:
        for kind, threshold in truth.required.items():
            if kind == "target":
                if not self.target_axis.at_or_after(env.target_commit, threshold):
                    return False
            elif kind == "fuzzer":
                if not self.fuzzer_axis.at_or_after(env.fuzzer_commit, threshold):
                    return False
            elif kind == "description":
                if not self.fuzzer_axis.at_or_after(env.description_commit, threshold):
                    return False
        return True

    def blocker_active(self, env: FuzzEnvironment, truth: BugTruth) -> bool:
        if truth.blocking_bug_id is None:
            return False
        blocker_fix = truth.required.get("target")
        if blocker_fix is None:
            return False
        if self.target_axis.at_or_after(env.target_commit, blocker_fix):
            return False
        blocker = self.bugs.get(truth.blocking_bug_id)
        if blocker is None:
            return False
        return self.target_axis.at_or_after(env.target_commit, blocker.guilty_commit)

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "deterministic": self.deterministic,
            "knee_vms": self.knee_vms,
            "legacy_inout": self.legacy_inout,
            "target_axis": [c.to_row() for c in self.target_axis.commits],
            "fuzzer_axis": [c.to_row() for c in self.fuzzer_axis.commits],
            "description_events": [[cid, decls] for cid, decls in self.description_events],
            "bugs": {bid: t.to_doc() for bid, t in self.bugs.items()},
            "records": {bid: r.to_doc() for bid, r in self.records.items()},
            "toolchains": self.toolchains.to_rows(),
            "patch_rules": self.patch_rules.to_rows(),
            "unstable": {k: sorted(v) for k, v in self.unstable.items()},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SyntheticWorld":
        target = CommitAxis("target", [Commit.from_row(r) for r in doc["target_axis"]])
        fuzzer = CommitAxis("fuzzer", [Commit.from_row(r) for r in doc["fuzzer_axis"]])
        return cls(
            target_axis=target,
            fuzzer_axis=fuzzer,
            description_events=[(cid, dict(decls)) for cid, decls in doc["description_events"]],
            bugs={bid: BugTruth.from_doc(d) for bid, d in doc["bugs"].items()},
            records={bid: BugRecord.from_doc(d) for bid, d in doc["records"].items()},
            toolchains=ToolchainTable.from_rows(doc["toolchains"]),
            patch_rules=PatchRuleTable.from_rows(doc["patch_rules"]),
            knee_vms=doc["knee_vms"],
            deterministic=doc["deterministic"],
            seed=doc["seed"],
            unstable={k: frozenset(v) for k, v in doc.get("unstable", {}).items()},
            legacy_inout=doc.get("legacy_inout", False),
        )


def session_seed(world_seed: int, bug_id: str, env: FuzzEnvironment, ordinal: int) -> int:
    """Stable per-session seed so identical probes replay identically."""
    blob = "|".join(
        [
            str(world_seed),
            bug_id,
            env.target_commit,
            env.fuzzer_commit,
            env.description_commit,
            env.focused_hash,
            str(ordinal),
        ]
    )
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big")


def effective_mean_minutes(world: SyntheticWorld, truth: BugTruth, vm_count: int) -> float:
    """Find-time mean scales inversely with VM throughput up to the knee."""
    effective = min(max(vm_count, 1), world.knee_vms)
    return truth.mean_find_minutes * world.vm_reference / effective


def run_session(
    world: SyntheticWorld,
    env: FuzzEnvironment,
    bug_id: str,
    budget: FuzzBudget,
    seed: int,
) -> SessionOutcome:
    """Execute one synthetic fuzzing session.

    Unstable environments abort immediately. Otherwise the bug is findable
    iff the environment dominates every ground-truth threshold; each attempt
    then succeeds with the bug's per-attempt probability and a find time
    drawn from an exponential capped by the budget. The session stops at the
    first find. The blocking bug, while active, shows up in the observed
    crashes with its block probability.
    """
    truth = world.bugs.get(bug_id)
    if truth is None:
        raise UnknownBugError(f"unknown bug {bug_id!r}")
    world.sessions_run += 1
    rng = random.Random(seed)

    if world.env_is_unstable(env):
        return SessionOutcome(
            status="unstable",
            unstable_reason=rng.choice(UNSTABLE_REASONS),
        )

    observed: list[str] = []
    if world.blocker_active(env, truth):
        if world.deterministic or rng.random() < truth.block_probability:
            observed.append(truth.blocking_bug_id)

    findable = world.dominates(env, truth)
    mean = effective_mean_minutes(world, truth, env.vm_count)
    for _ in range(budget.attempts):
        if world.deterministic:
            hit = findable
            t = mean
        else:
            hit = findable and rng.random() < truth.find_probability
            t = rng.expovariate(1.0 / mean)
        if hit and t <= budget.max_time:
            observed.append(bug_id)
            return SessionOutcome(
                status="found",
                time_to_find=t,
                observed_crashes=tuple(observed),
            )
    return SessionOutcome(status="not_found", observed_crashes=tuple(observed))


def budget_from_trials(find_times, crash_kind: str) -> FuzzBudget | None:
    """Derive the frozen per-bug budget from the preliminary trial times.

    None means no trial found the bug and it must be skipped. Memory leaks
    always get the escalated budget; so does any bug whose trial find time
    reached 80% of the trial window, since the calculated time cannot be
    trusted for bugs that slow.
    """
    times = [t for t in find_times if t is not None]
    if not times:
        return None
    if crash_kind == "memory_leak":
        return ESCALATED_BUDGET
    if any(t >= SLOW_FIND_FRACTION * TRIAL_MINUTES for t in times):
        return ESCALATED_BUDGET
    estimate = fmean(times) + pstdev(times)
    if estimate > MAX_BUDGET_MINUTES:
        log.warning("budget estimate %.1f min exceeds the %.0f-minute cap; clamping",
                    estimate, MAX_BUDGET_MINUTES)
    return FuzzBudget(min(MAX_BUDGET_MINUTES, max(MIN_BUDGET_MINUTES, estimate)), 3)


def calibrate_budget(
    world: SyntheticWorld,
    bug_id: str,
    env: FuzzEnvironment,
) -> tuple[FuzzBudget | None, list[SessionOutcome]]:
    """Run the three 30-minute trials at the finding environment.

    Returns (budget, trial outcomes); a None budget is the skip signal.
    """
    truth = world.bugs.get(bug_id)
    if truth is None:
        raise UnknownBugError(f"unknown bug {bug_id!r}")
    outcomes = [
        run_session(world, env, bug_id, TRIAL_BUDGET, session_seed(world.seed, bug_id, env, i))
        for i in range(TRIAL_COUNT)
    ]
    times = [o.time_to_find for o in outcomes if o.status == "found"]
    return budget_from_trials(times, truth.crash_kind), outcomes


def estimate_d2_vs_vms(
    world: SyntheticWorld,
    vm_counts,
    bugs_per_point: int,
    seed: int | None = None,
) -> list[tuple[int, float]]:
    """Simulated mean days-to-find per VM count.

    Uses common random draws across VM counts, so the curve is monotone
    non-increasing by construction and exactly flat past the knee.
    """
    vm_counts = list(vm_counts)
    if not vm_counts:
        raise OracleError("vm_counts must be non-empty")
    if bugs_per_point < 1:
        raise OracleError("bugs_per_point must be positive")
    bug_ids = sorted(world.bugs)
    rng = random.Random(world.seed * 1_000_003 + 17 if seed is None else seed)
    draws = []
    for i in range(bugs_per_point):
        truth = world.bugs[bug_ids[i % len(bug_ids)]]
        base = truth.d2_scale_days
        factor = 1.0 if world.deterministic else rng.expovariate(1.0)
        draws.append(base * factor)
    curve = []
    for vm in vm_counts:
        effective = min(max(vm, 1), world.knee_vms)
        scale = world.vm_reference / effective
        curve.append((vm, fmean(d * scale for d in draws)))
    return curve
