"""The retrospection pipeline.

For one bug: calibrate a fuzz budget at the finding environment, probe the
guilty commit for an early never-hidden exit, then narrow the revealing
commit in three phases — bisect the relevant description commits (with a
confirmation probe against the immediately older description set), bisect
target commits between the bracketing description dates, and finally scan
the remaining fuzzer commits linearly. Every probe goes through a shared
cache keyed by (bug, target, fuzzer, focused-set hash).
"""

from __future__ import annotations

import datetime as dt
import logging
import re
from collections import Counter
from dataclasses import dataclass

from .history import (
    Commit,
    CommitAxis,
    commits_between,
    nearest_stable,
    representative_for_day,
    toolchain_for_date,
)
from .oracle import (
    ESCALATED_BUDGET,
    TRIAL_BUDGET,
    TRIAL_COUNT,
    FuzzBudget,
    FuzzEnvironment,
    SessionOutcome,
    budget_from_trials,
    run_session,
    session_seed,
)
from .records import (
    SYZBOT_START,
    BugRecord,
    ProbeResult,
    RetrospectionReport,
)
from .storage import MemoryCache
from .syzlang import (
    CorpusIncompleteError,
    DEFAULT_MANDATORY_CALLS,
    NeverDescribableError,
    ResolutionError,
    UnsatisfiableResourceError,
    focus,
    relevant_description_commits,
)

log = logging.getLogger(__name__)

SANITIZER_PATH_PREFIXES = (
    "mm/kasan",
    "mm/kmsan",
    "mm/kfence",
    "mm/kmemleak",
    "kernel/kcsan",
    "lib/ubsan",
)

SANITIZER_MESSAGE_RE = re.compile(r"\b(kasan|kmsan|kcsan|ubsan|kmemleak|kfence)\b", re.I)

_UNBUILDABLE = "unbuildable"


class RetrospectError(Exception):
    pass


class ContractViolationError(RetrospectError):
    """The caller-established precondition (newest probe succeeds) is false."""


@dataclass
class BisectResult:
    earliest_success: Commit | None
    latest_failure: Commit | None
    unstable_range: bool = False
    unstable_ids: tuple[str, ...] = ()


def bisect_earliest_success(candidates, probe) -> BisectResult:
    """Find the oldest succeeding candidate adjacent to the newest failure.

    ``candidates`` run newest to oldest; ``probe`` returns "success",
    "failure", or "unstable". Unstable probes are replaced by the nearest
    stable candidate inside the current bracket (alternating -1, +1, -2, ...);
    when an entire bracket is unstable the boundary is reported as a range.
    A latest_failure of None means every candidate succeeds.
    """
    candidates = list(candidates)
    if not candidates:
        raise RetrospectError("bisect needs at least one candidate")
    memo: dict[int, str] = {}

    def p(i: int) -> str:
        if i not in memo:
            memo[i] = probe(candidates[i])
        return memo[i]

    anchor = None
    for i in range(len(candidates)):
        st = p(i)
        if st != "unstable":
            anchor = (i, st)
            break
    if anchor is None:
        return BisectResult(
            earliest_success=None,
            latest_failure=None,
            unstable_range=True,
            unstable_ids=tuple(c.id for c in candidates),
        )
    lo, st0 = anchor
    if st0 != "success":
        raise ContractViolationError(
            f"newest probe-able candidate {candidates[lo].id!r} did not succeed"
        )
    hi = len(candidates)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        st = p(mid)
        if st == "unstable":
            shifted = None
            for r in range(1, hi - lo):
                for k in (mid - r, mid + r):
                    if lo < k < hi:
                        st_k = p(k)
                        if st_k != "unstable":
                            shifted = (k, st_k)
                            break
                if shifted:
                    break
            if shifted is None:
                inner = candidates[lo + 1 : hi]
                return BisectResult(
                    earliest_success=candidates[lo],
                    latest_failure=candidates[hi] if hi < len(candidates) else None,
                    unstable_range=True,
                    unstable_ids=tuple(c.id for c in inner),
                )
            mid, st = shifted
        if st == "success":
            lo = mid
        else:
            hi = mid
    latest = candidates[hi] if hi < len(candidates) else None
    return BisectResult(earliest_success=candidates[lo], latest_failure=latest)


def detect_blocking_candidates(session_log, bug_id: str, threshold: float = 0.5):
    """Foreign crashes that co-occur with failing sessions for this bug.

    Rate = sessions where the crash appeared and the bug was not found,
    divided by all not-found sessions. Returns (crash id, rate) sorted by
    descending rate, filtered at ``threshold``.
    """
    misses = [p for p in session_log if p.status == "not_found"]
    if not misses:
        return ()
    counts: Counter[str] = Counter()
    for p in misses:
        for cid in set(p.observed_crashes) - {bug_id}:
            counts[cid] += 1
    out = [
        (cid, n / len(misses))
        for cid, n in counts.items()
        if n / len(misses) >= threshold
    ]
    out.sort(key=lambda pair: (-pair[1], pair[0]))
    return tuple(out)


def classify_factor(
    revealing: Commit,
    guilty_ids,
    blocking_candidates,
    fix_index: dict[str, set[str]],
    sanitizer_paths=SANITIZER_PATH_PREFIXES,
    sanitizer_re=SANITIZER_MESSAGE_RE,
):
    """Sub-classify a target-axis revealing commit.

    Returns (factor_class, flags). The guilty commit itself means the bug was
    never hidden; sanitizer-looking commits stay flagged for confirmation; a
    commit that fixes a detected blocking candidate is a blocking-bug reveal;
    a commit that matches both rules needs manual review.
    """
    if revealing.id in set(guilty_ids):
        return "never_hidden", frozenset()
    sanitizer = bool(sanitizer_re.search(revealing.message)) or any(
        path.startswith(prefix)
        for path in revealing.touched_paths
        for prefix in sanitizer_paths
    )
    candidate_ids = {cid for cid, _ in blocking_candidates}
    blocking = bool(fix_index.get(revealing.id, set()) & candidate_ids)
    if sanitizer and blocking:
        return "needs_manual_review", frozenset({"sanitizer_and_blocking_fix"})
    if sanitizer:
        return "sanitizer_commit", frozenset({"sanitizer_match_needs_confirmation"})
    if blocking:
        return "blocking_bug", frozenset()
    return "kernel_commit", frozenset()


_TITLE_FN_RE = re.compile(r"\bin ([A-Za-z0-9_$.]+)")
_SANITIZER_TITLE_PREFIXES = ("KASAN", "KMSAN", "KCSAN", "UBSAN")


def _title_signature(bug: BugRecord):
    sanitizer = ""
    head = bug.title.split(":", 1)[0].strip()
    if head in _SANITIZER_TITLE_PREFIXES:
        sanitizer = head
    fns = _TITLE_FN_RE.findall(bug.title)
    crash_fn = fns[-1] if fns else ""
    return (sanitizer, crash_fn, bug.crash_kind)


def group_duplicates(bugs):
    """Partition bugs by shared fix commits; suggest likely duplicates.

    Bugs sharing any fix commit share a root cause and are grouped
    automatically. Pairs in different groups that agree on crashing
    function, crash kind, and sanitizer are emitted as suggestions only —
    they are never merged without a human look.
    """
    bugs = list(bugs)
    parent: dict[str, str] = {b.id: b.id for b in bugs}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    by_fix: dict[str, str] = {}
    for bug in bugs:
        for fix in bug.fix_commits:
            if fix in by_fix:
                union(bug.id, by_fix[fix])
            else:
                by_fix[fix] = bug.id

    groups: dict[str, list[str]] = {}
    for bug in bugs:
        groups.setdefault(find(bug.id), []).append(bug.id)
    for members in groups.values():
        members.sort()

    suggestions = []
    by_sig: dict[tuple, list[BugRecord]] = {}
    for bug in bugs:
        sig = _title_signature(bug)
        if sig[1]:  # need a crash function to compare at all
            by_sig.setdefault(sig, []).append(bug)
    for sig, members in sorted(by_sig.items()):
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                if find(a.id) != find(b.id):
                    suggestions.append((a.id, b.id, f"same crash signature {sig}"))
    return groups, suggestions


@dataclass
class EngineConfig:
    mandatory_calls: tuple[str, ...] = DEFAULT_MANDATORY_CALLS
    blocking_threshold: float = 0.5
    retry_failed_probes: bool = True
    unstable_radius: int = 5
    vm_count: int = 10
    epoch: "dt.date" = SYZBOT_START
    sanitizer_paths: tuple[str, ...] = SANITIZER_PATH_PREFIXES


class WorldBackend:
    """Session provider backed by a synthetic world."""

    def __init__(self, world):
        self.world = world

    @property
    def target_axis(self) -> CommitAxis:
        return self.world.target_axis

    @property
    def fuzzer_axis(self) -> CommitAxis:
        return self.world.fuzzer_axis

    @property
    def snapshots(self):
        return self.world.snapshots

    @property
    def toolchains(self):
        return self.world.toolchains

    @property
    def patch_rules(self):
        return self.world.patch_rules

    def run(self, env: FuzzEnvironment, bug_id: str, budget: FuzzBudget, ordinal: int):
        seed = session_seed(self.world.seed, bug_id, env, ordinal)
        return run_session(self.world, env, bug_id, budget, seed)


class Retrospector:
    """Drives the full per-bug workflow against a session backend.

    One instance serves a whole campaign; per-bug state lives in a private
    run context so distinct bugs can be retrospected concurrently. The cache
    is the only shared mutable state.
    """

    def __init__(self, backend, cache=None, config: EngineConfig | None = None, fix_index=None):
        self.backend = backend
        self.cache = cache if cache is not None else MemoryCache()
        self.config = config or EngineConfig()
        self.fix_index: dict[str, set[str]] = fix_index or {}

    # -- environment assembly -------------------------------------------
    def _fuzzer_for_day(self, day) -> Commit:
        axis = self.backend.fuzzer_axis
        if day < axis.oldest.day:
            # the fuzzer did not exist yet; its earliest build is the
            # closest faithful stand-in
            return axis.oldest
        return representative_for_day(axis, day)

    def _target_for_day(self, day) -> Commit:
        return representative_for_day(self.backend.target_axis, day)

    def _focused_hash(self, ctx, desc: Commit) -> str:
        cached = ctx.focus_cache.get(desc.id)
        if cached is not None:
            return cached
        corpus = self.backend.snapshots.corpus_at(desc.id)
        try:
            fs = focus(corpus, ctx.bug.reproducer_calls, self.config.mandatory_calls)
            value = fs.identity_hash()
        except (ResolutionError, CorpusIncompleteError, UnsatisfiableResourceError):
            # the fuzzer cannot even be built from this snapshot
            value = f"{_UNBUILDABLE}:{desc.id}"
        ctx.focus_cache[desc.id] = value
        return value

    def _env(self, ctx, target: Commit, fuzzer: Commit, desc: Commit) -> FuzzEnvironment:
        toolchain = ""
        if self.backend.toolchains is not None:
            toolchain = toolchain_for_date(self.backend.toolchains, target.day)
        patches = frozenset()
        if self.backend.patch_rules is not None:
            patches = self.backend.patch_rules.patches_for(
                {"target": self.backend.target_axis, "fuzzer": self.backend.fuzzer_axis},
                {"target": target.id, "fuzzer": fuzzer.id},
            )
        return FuzzEnvironment(
            target_commit=target.id,
            fuzzer_commit=fuzzer.id,
            description_commit=desc.id,
            focused_hash=self._focused_hash(ctx, desc),
            toolchain=toolchain,
            config=ctx.bug.config,
            patches=patches,
            vm_count=self.config.vm_count,
        )

    def _same_day_env(self, ctx, desc: Commit) -> FuzzEnvironment:
        return self._env(ctx, self._target_for_day(desc.day), self._fuzzer_for_day(desc.day), desc)

    def _same_day_status(self, ctx, desc: Commit, label: str) -> str:
        """Probe a description commit in its own-day environment.

        When the composed environment is unstable, shift the target and
        fuzzer coordinates to their nearest stable neighbors and retry once.
        The description coordinate is never shifted: its content is the
        variable under test.
        """
        st = self._status(ctx, self._same_day_env(ctx, desc), label)
        if st != "unstable":
            return st
        target = self._target_for_day(desc.day)
        fuzzer = self._fuzzer_for_day(desc.day)
        alt_t = nearest_stable(self.backend.target_axis, target.id, self.config.unstable_radius)
        alt_f = nearest_stable(self.backend.fuzzer_axis, fuzzer.id, self.config.unstable_radius)
        if alt_t is None or alt_f is None or (alt_t.id, alt_f.id) == (target.id, fuzzer.id):
            return "unstable"
        ctx.flags.add("environment_shifted_for_stability")
        return self._status(ctx, self._env(ctx, alt_t, alt_f, desc), f"{label} (shifted)")

    # -- probing ----------------------------------------------------------
    def _record(self, ctx, env, outcome: SessionOutcome, cached: bool, label: str) -> None:
        ctx.log.append(
            ProbeResult(
                bug_id=ctx.bug.id,
                target_commit=env.target_commit,
                fuzzer_commit=env.fuzzer_commit,
                description_commit=env.description_commit,
                focused_hash=env.focused_hash,
                status=outcome.status,
                time_to_find=outcome.time_to_find,
                unstable_reason=outcome.unstable_reason,
                observed_crashes=outcome.observed_crashes,
                cached=cached,
                label=label,
            )
        )

    def _probe(self, ctx, env: FuzzEnvironment, label: str) -> SessionOutcome:
        key = env.cache_key(ctx.bug.id)
        hit = self.cache.get_session(key)
        if hit is not None:
            outcome = SessionOutcome.from_doc(hit)
            self._record(ctx, env, outcome, cached=True, label=label)
            return outcome
        if env.focused_hash.startswith(_UNBUILDABLE):
            outcome = SessionOutcome(status="not_found")
            self._record(ctx, env, outcome, cached=False, label=f"{label} (descriptions unbuildable)")
        else:
            outcome = self.backend.run(env, ctx.bug.id, ctx.budget, ordinal=0)
            self._record(ctx, env, outcome, cached=False, label=label)
            if outcome.status == "not_found" and self.config.retry_failed_probes:
                retry_budget = FuzzBudget(
                    max(ESCALATED_BUDGET.max_time, ctx.budget.max_time),
                    ESCALATED_BUDGET.attempts,
                )
                retry = self.backend.run(env, ctx.bug.id, retry_budget, ordinal=1)
                self._record(ctx, env, retry, cached=False, label=f"{label} (retry)")
                if retry.status == "found":
                    ctx.flags.add("probe_retry_overturned")
                    outcome = retry
        self.cache.put_session(key, outcome.to_doc())
        return outcome

    def _status(self, ctx, env: FuzzEnvironment, label: str) -> str:
        outcome = self._probe(ctx, env, label)
        return {"found": "success", "not_found": "failure", "unstable": "unstable"}[
            outcome.status
        ]

    # -- budget ------------------------------------------------------------
    def _stability_shifted(self, ctx, env: FuzzEnvironment) -> FuzzEnvironment | None:
        """Same environment with every coordinate moved to a stable neighbor.

        Only for probes where the description set is not the variable under
        test (the preliminary session); the snapshot may shift by one
        description event, which the flag records.
        """
        alt_t = nearest_stable(
            self.backend.target_axis, env.target_commit, self.config.unstable_radius
        )
        alt_f = nearest_stable(
            self.backend.fuzzer_axis, env.fuzzer_commit, self.config.unstable_radius
        )
        alt_d = nearest_stable(
            self.backend.fuzzer_axis, env.description_commit, self.config.unstable_radius
        )
        if alt_t is None or alt_f is None or alt_d is None:
            return None
        if (alt_t.id, alt_f.id, alt_d.id) == (
            env.target_commit,
            env.fuzzer_commit,
            env.description_commit,
        ):
            return None
        ctx.flags.add("environment_shifted_for_stability")
        return self._env(ctx, alt_t, alt_f, alt_d)

    def _budget_for(self, ctx, env: FuzzEnvironment) -> FuzzBudget | None:
        rec = self.cache.get_budget(ctx.bug.id)
        if rec is not None:
            if rec.get("skip"):
                return None
            return FuzzBudget(rec["max_time"], rec["attempts"])
        times = []
        for i in range(TRIAL_COUNT):
            outcome = self.backend.run(env, ctx.bug.id, TRIAL_BUDGET, ordinal=100 + i)
            self._record(ctx, env, outcome, cached=False, label=f"preliminary trial {i + 1}")
            if outcome.status == "unstable" and i == 0:
                shifted = self._stability_shifted(ctx, env)
                if shifted is not None:
                    env = shifted
                    outcome = self.backend.run(env, ctx.bug.id, TRIAL_BUDGET, ordinal=100 + i)
                    self._record(
                        ctx, env, outcome, cached=False, label="preliminary trial 1 (shifted)"
                    )
            times.append(outcome.time_to_find if outcome.status == "found" else None)
        budget = budget_from_trials(times, ctx.bug.crash_kind)
        if budget is None:
            self.cache.put_budget(ctx.bug.id, {"skip": True})
        else:
            self.cache.put_budget(
                ctx.bug.id, {"max_time": budget.max_time, "attempts": budget.attempts}
            )
        return budget

    # -- main entry ----------------------------------------------------------
    def run(self, bug: BugRecord) -> RetrospectionReport:
        ctx = _RunContext(bug)
        try:
            return self._run(ctx)
        except NeverDescribableError:
            return self._report(ctx, status="never_describable")

    def _run(self, ctx) -> RetrospectionReport:
        bug = ctx.bug
        target_axis = self.backend.target_axis
        fuzzer_axis = self.backend.fuzzer_axis

        rel_axis = relevant_description_commits(
            fuzzer_axis, self.backend.snapshots, bug.reproducer_calls, self.config.mandatory_calls
        )

        finding = target_axis.by_id(bug.finding_commit)
        finding_fuzzer = self._fuzzer_for_day(bug.finding_date)
        ctx.budget = TRIAL_BUDGET
        prelim_env = self._env(ctx, finding, finding_fuzzer, finding_fuzzer)
        budget = self._budget_for(ctx, prelim_env)
        if budget is None:
            return self._report(ctx, status="skipped_unreproducible")
        ctx.budget = budget

        # cheapest classification first: a bug findable at its guilty commit
        # was never hidden
        guilty = self._oldest_guilty(ctx)
        if guilty is not None:
            outcome = self._guilty_probe(ctx, guilty)
            if outcome == "success":
                return self._completed(ctx, "target", guilty, factor="never_hidden")

        candidates = [c for c in rel_axis if c.day <= bug.finding_date]
        if not candidates:
            ctx.flags.add("no_description_candidates")
            return self._manual(ctx, "target", finding)
        try:
            return self._phase1(ctx, candidates, finding)
        except ContractViolationError:
            # an anchor that must succeed did not; with skipped unstable
            # environments the boundary is unresolvable, otherwise the probe
            # pattern is contradictory
            if ctx.unstable_seen:
                span = [c for c in candidates if c.id in set(ctx.unstable_seen)]
                if span:
                    return self._unstable_range(ctx, "description", span[-1], span[0])
            ctx.flags.add("anchor_probe_failed")
            return self._manual(ctx, "target", finding)

    # -- phases ---------------------------------------------------------------
    def _phase1(self, ctx, candidates, finding: Commit) -> RetrospectionReport:
        """Bisect relevant description commits; confirm against the older set."""
        probe = lambda c: self._same_day_status(ctx, c, "phase1 description")
        first = None
        for i, cand in enumerate(candidates):
            st = probe(cand)
            if st != "unstable":
                first = (i, st)
                break
            ctx.unstable_seen.append(cand.id)
        if first is None:
            return self._unstable_range(ctx, "description", candidates[-1], candidates[0])
        i0, st0 = first

        if st0 == "failure":
            # even the newest relevant description set fails in its own-day
            # environment: the reveal is a target or fuzzer commit newer
            # than it, with this description content pinned
            return self._phase2(ctx, pin=candidates[i0], newest_target=finding)

        res = bisect_earliest_success(candidates[i0:], probe)
        if res.unstable_range:
            return self._unstable_range(
                ctx, "description", res.latest_failure or candidates[-1],
                res.earliest_success or candidates[0], res.unstable_ids,
            )
        d_s, d_f = res.earliest_success, res.latest_failure

        if d_f is None:
            control = self._pre_intro_control(d_s)
            if control is None:
                return self._completed(ctx, "description", d_s, factor="description_commit")
            st = self._confirmation_status(ctx, d_s, control)
            if st == "failure":
                return self._completed(ctx, "description", d_s, factor="description_commit")
            # descriptions older than the first relevant commit still find
            # the bug: contradictory with the relevance computation
            ctx.flags.add("description_all_success")
            return self._manual(ctx, "description", d_s)

        st = self._confirmation_status(ctx, d_s, d_f)
        if st == "failure":
            return self._completed(ctx, "description", d_s, factor="description_commit")
        if st == "unstable":
            ctx.flags.add("confirmation_unstable")
            return self._manual(ctx, "description", d_s)
        return self._phase2(ctx, pin=d_f, newest_target=self._target_for_day(d_s.day))

    def _confirmation_status(self, ctx, d_s: Commit, control: Commit) -> str:
        """Re-probe the earliest success with the immediately older description set."""
        env = self._env(
            ctx, self._target_for_day(d_s.day), self._fuzzer_for_day(d_s.day), control
        )
        st = self._status(ctx, env, "phase1 confirmation")
        if st != "unstable":
            return st
        alt_t = nearest_stable(
            self.backend.target_axis, env.target_commit, self.config.unstable_radius
        )
        alt_f = nearest_stable(
            self.backend.fuzzer_axis, env.fuzzer_commit, self.config.unstable_radius
        )
        if alt_t is None or alt_f is None:
            return "unstable"
        if (alt_t.id, alt_f.id) == (env.target_commit, env.fuzzer_commit):
            return "unstable"
        ctx.flags.add("environment_shifted_for_stability")
        env2 = self._env(ctx, alt_t, alt_f, control)
        return self._status(ctx, env2, "phase1 confirmation (shifted)")

    def _pre_intro_control(self, d_s: Commit) -> Commit | None:
        """The fuzzer commit immediately older than a description commit."""
        axis = self.backend.fuzzer_axis
        pos = axis.index_of(d_s.id)
        if pos + 1 >= len(axis):
            return None
        return axis.commits[pos + 1]

    def _phase2(self, ctx, pin: Commit, newest_target: Commit) -> RetrospectionReport:
        """Bisect target commits with the description set pinned.

        Each probe composes the fuzzer commit of the target's own day, so a
        fuzzer-side reveal surfaces as a day boundary here and is then told
        apart from a kernel reveal by re-probing the failing target with the
        succeeding day's fuzzer.
        """
        target_axis = self.backend.target_axis
        oldest = self._target_for_day(pin.day)
        cands = list(commits_between(target_axis, oldest.id, newest_target.id))
        probe = lambda c: self._status(
            ctx,
            self._env(ctx, c, self._fuzzer_for_day(c.day), pin),
            "phase2 target",
        )
        try:
            res = bisect_earliest_success(cands, probe)
        except ContractViolationError:
            ctx.flags.add("anchor_probe_failed")
            return self._manual(ctx, "target", newest_target)
        if res.unstable_range:
            return self._unstable_range(
                ctx, "target", res.latest_failure or cands[-1],
                res.earliest_success or cands[0], res.unstable_ids,
            )
        t_s, t_f = res.earliest_success, res.latest_failure
        if t_f is None:
            # nothing failed all the way down, yet the faithful guilty-day
            # probe did fail earlier: contradictory probe pattern
            ctx.flags.add("phase2_no_failure")
            return self._manual(ctx, "target", t_s)

        confirm_env = self._env(ctx, t_f, self._fuzzer_for_day(t_s.day), pin)
        st = self._status(ctx, confirm_env, "phase2 confirmation")
        if st == "failure":
            return self._completed(ctx, "target", t_s)
        if st == "unstable":
            ctx.flags.add("confirmation_unstable")
            return self._manual(ctx, "target", t_s)
        return self._phase3(ctx, pin, t_s, t_f)

    def _phase3(self, ctx, pin: Commit, t_s: Commit, t_f: Commit) -> RetrospectionReport:
        """Linear backward scan of the remaining fuzzer commits.

        Target pinned to the boundary day's representative; candidates are
        the fuzzer commits between the failing and succeeding days.
        """
        fuzzer_axis = self.backend.fuzzer_axis
        f_new = self._fuzzer_for_day(t_s.day)
        f_old = self._fuzzer_for_day(t_f.day)
        t_pin = self._target_for_day(t_s.day)
        window = [
            c for c in commits_between(fuzzer_axis, f_old.id, f_new.id) if c.id != f_old.id
        ]
        if not window:
            ctx.flags.add("phase3_empty_window")
            return self._manual(ctx, "target", t_s)

        prev_success: Commit | None = None
        unstable_since: list[str] = []
        for cand in window:
            st = self._status(ctx, self._env(ctx, t_pin, cand, pin), "phase3 fuzzer")
            if st == "unstable":
                ctx.unstable_seen.append(cand.id)
                unstable_since.append(cand.id)
                continue
            if st == "success":
                prev_success = cand
                unstable_since = []
                continue
            if prev_success is None:
                ctx.flags.add("phase3_newest_failed")
                return self._manual(ctx, "fuzzer", cand)
            if unstable_since:
                return self._unstable_range(ctx, "fuzzer", cand, prev_success, unstable_since)
            return self._completed(ctx, "fuzzer", prev_success, factor="syzkaller_commit")

        st = self._status(ctx, self._env(ctx, t_pin, f_old, pin), "phase3 anchor")
        if st == "failure" and prev_success is not None:
            if unstable_since:
                return self._unstable_range(ctx, "fuzzer", f_old, prev_success, unstable_since)
            return self._completed(ctx, "fuzzer", prev_success, factor="syzkaller_commit")
        ctx.flags.add("phase3_no_boundary")
        return self._manual(ctx, "fuzzer", prev_success or f_new)

    # -- guilty probe -----------------------------------------------------
    def _oldest_guilty(self, ctx) -> Commit | None:
        axis = self.backend.target_axis
        on_axis = [g for g in ctx.bug.guilty_commits if g in axis]
        if not on_axis:
            return None
        return min((axis.by_id(g) for g in on_axis), key=lambda c: c.sort_key)

    def _guilty_probe(self, ctx, guilty: Commit) -> str:
        day = max(ctx.bug.guilty_date, self.backend.fuzzer_axis.oldest.day)
        fuzz = self._fuzzer_for_day(day)
        env = self._env(ctx, guilty, fuzz, fuzz)
        st = self._status(ctx, env, "guilty probe")
        if st != "unstable":
            return st
        alt = nearest_stable(self.backend.target_axis, guilty.id, self.config.unstable_radius)
        if alt is not None and alt.id != guilty.id:
            ctx.flags.add("guilty_probe_shifted")
            env2 = self._env(ctx, alt, fuzz, fuzz)
            return self._status(ctx, env2, "guilty probe (shifted)")
        ctx.flags.add("guilty_probe_unstable")
        return "unstable"

    # -- report assembly ------------------------------------------------------
    def _base_report(self, ctx, status: str) -> RetrospectionReport:
        return RetrospectionReport(
            bug_id=ctx.bug.id,
            status=status,
            guilty_date=ctx.bug.guilty_date,
            finding_date=ctx.bug.finding_date,
            directory=ctx.bug.directory,
            session_log=tuple(ctx.log),
            blocking_candidates=detect_blocking_candidates(
                ctx.log, ctx.bug.id, self.config.blocking_threshold
            ),
            manual_flags=tuple(sorted(ctx.flags)),
        )

    def _report(self, ctx, status: str) -> RetrospectionReport:
        return self._base_report(ctx, status)

    def _completed(
        self, ctx, axis: str, revealing: Commit, factor: str | None = None
    ) -> RetrospectionReport:
        report = self._base_report(ctx, "completed")
        if factor is None:
            factor, flags = classify_factor(
                revealing,
                ctx.bug.guilty_commits,
                report.blocking_candidates,
                self.fix_index,
                self.config.sanitizer_paths,
            )
            if flags:
                ctx.flags.update(flags)
                report.manual_flags = tuple(sorted(ctx.flags))
        epoch = self.config.epoch
        revealing_date = max(revealing.day, epoch)
        floor = max(ctx.bug.guilty_date, epoch)
        if revealing_date < floor or revealing_date > ctx.bug.finding_date:
            ctx.flags.add("date_disorder")
            report.manual_flags = tuple(sorted(ctx.flags))
            revealing_date = min(max(revealing_date, floor), ctx.bug.finding_date)
        report.revealing_commit = revealing.id
        report.revealing_axis = axis
        report.factor_class = factor
        report.revealing_date = revealing_date
        report.d1_days = (revealing_date - floor).days
        report.d2_days = (ctx.bug.finding_date - revealing_date).days
        return report

    def _manual(self, ctx, axis: str, best_guess: Commit) -> RetrospectionReport:
        report = self._completed(ctx, axis, best_guess, factor="needs_manual_review")
        return report

    def _unstable_range(
        self, ctx, axis: str, older: Commit, newer: Commit, unstable_ids=()
    ) -> RetrospectionReport:
        report = self._base_report(ctx, "unstable_range")
        report.revealing_axis = axis
        report.revealing_range = (older.id, newer.id)
        report.unstable_ids = tuple(unstable_ids) or tuple(ctx.unstable_seen)
        return report


class _RunContext:
    """Per-bug mutable state: log, budget, flags, focused-set cache."""

    def __init__(self, bug: BugRecord):
        self.bug = bug
        self.budget: FuzzBudget = TRIAL_BUDGET
        self.log: list[ProbeResult] = []
        self.flags: set[str] = set()
        self.unstable_seen: list[str] = []
        self.focus_cache: dict[str, str] = {}


def build_fix_index(bugs) -> dict[str, set[str]]:
    index: dict[str, set[str]] = {}
    for bug in bugs:
        for fix in bug.fix_commits:
            index.setdefault(fix, set()).add(bug.id)
    return index


def retrospect_bug(bug: BugRecord, backend, cache=None, config=None, fix_index=None):
    """One-shot convenience around :class:`Retrospector` for a single bug."""
    return Retrospector(backend, cache=cache, config=config, fix_index=fix_index).run(bug)
