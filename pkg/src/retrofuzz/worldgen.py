"""Synthetic-world generation: axes, description history, bugs, ground truth.

Worlds are reproducible from (spec, seed) alone and respect the requested
revealing-factor mix exactly, by construction. Each bug gets its own little
description family (a reproducer syscall plus the structs, flags, and
resources it drags in) whose introduction or edit dates encode the
ground-truth revealing condition.
"""

from __future__ import annotations

import datetime as dt
import math
import random
from dataclasses import dataclass, field, replace

from .history import Commit, CommitAxis, PatchRuleTable, ToolchainTable, UNSTABLE_REASONS
from .oracle import BugTruth, SyntheticWorld, WorldSpecError
from .records import SYZBOT_START, BugRecord

FACTOR_MIX_KEYS = (
    "description_commit",
    "syzkaller_commit",
    "kernel_commit",
    "blocking_bug",
    "sanitizer_commit",
    "never_hidden",
)

#: Measured factor distribution of a real six-year campaign (hidden share
#: 68.16%); counts are apportioned from these shares exactly.
DEFAULT_FACTOR_MIX = {
    "description_commit": 0.2272,
    "syzkaller_commit": 0.0984,
    "kernel_commit": 0.2111,
    "blocking_bug": 0.1413,
    "sanitizer_commit": 0.0036,
    "never_hidden": 0.3184,
}

_GENERIC_PATHS = (
    "drivers/usb/core.c",
    "drivers/net/wireguard/device.c",
    "drivers/hid/hid-core.c",
    "fs/ext4/inode.c",
    "fs/nilfs2/segment.c",
    "net/ipv4/tcp_input.c",
    "net/packet/af_packet.c",
    "kernel/sched/fair.c",
    "kernel/futex.c",
    "mm/slub.c",
    "block/blk-core.c",
    "sound/core/seq.c",
    "crypto/af_alg.c",
)

_GENERIC_MESSAGES = (
    "fix refcount imbalance on error path",
    "tighten bounds check before copy",
    "serialize teardown against open",
    "add missing unlock in error path",
    "rework queue handling",
    "validate user-supplied length",
    "simplify state machine",
)

_SANITIZER_TOUCH = ("mm/kasan/report.c",)
_SANITIZER_MESSAGE = "kasan: extend out-of-bounds reporting"

_CRASH_DIRS = ("drivers", "fs", "net", "kernel", "mm", "sound")

_TITLE_TEMPLATES = {
    "kasan": "KASAN: use-after-free Read in {fn}",
    "warning": "WARNING in {fn}",
    "memory_leak": "memory leak in {fn}",
    "race": "KCSAN: data-race in {fn}",
    "other": "general protection fault in {fn}",
}

BASE_DECLS = {
    "mmap": "mmap(addr intptr, len intptr, prot int32, flags int32, fd int32, off intptr)",
    "syz_execute_func": "syz_execute_func(text ptr[in, exec_blob])",
    "exec_blob": "exec_blob {\n\tcode\tarray[int8, 64]\n}",
    "open_flags": "open_flags = 1, 2, 64, 512",
    "openat": "openat(dir int32, file ptr[in, generic_name], flags flags[open_flags]) fd_generic",
    "close": "close(fd fd_generic)",
    "fd_generic": "resource fd_generic[int32]",
    "generic_name": "generic_name {\n\tname\tarray[int8, 32]\n}",
}


@dataclass
class WorldSpec:
    """Parameters for :func:`generate_world`; see ``from_doc`` for file keys."""

    bug_count: int = 200
    seed: int = 7
    deterministic: bool = True
    factor_mix: dict = field(default_factory=lambda: dict(DEFAULT_FACTOR_MIX))
    find_probability: float = 1.0
    mean_find_minutes: tuple[float, float] = (2.0, 8.0)
    memory_leak_share: float = 0.08
    block_probability: float = 0.7
    unstable_density: float = 0.0
    knee_vms: int = 20
    decoy_families: int = 25
    target_start: dt.date = dt.date(2014, 1, 1)
    target_end: dt.date = dt.date(2023, 2, 7)
    fuzzer_start: dt.date = dt.date(2015, 10, 1)
    legacy_inout: bool = False

    def validate(self) -> None:
        if self.bug_count < 1:
            raise WorldSpecError("bug_count must be positive")
        unknown = set(self.factor_mix) - set(FACTOR_MIX_KEYS)
        if unknown:
            raise WorldSpecError(f"unknown factor mix keys: {sorted(unknown)}")
        if any(v < 0 for v in self.factor_mix.values()) or sum(self.factor_mix.values()) <= 0:
            raise WorldSpecError("factor mix shares must be non-negative and not all zero")
        if not (0.0 < self.find_probability <= 1.0):
            raise WorldSpecError("find_probability must be in (0, 1]")
        if not (0.0 <= self.unstable_density < 1.0):
            raise WorldSpecError("unstable_density must be in [0, 1)")
        if self.knee_vms < 1:
            raise WorldSpecError("knee_vms must be positive")
        if not (self.target_start < self.fuzzer_start < self.target_end):
            raise WorldSpecError("expected target_start < fuzzer_start < target_end")
        if (self.target_end - self.fuzzer_start).days < 400:
            raise WorldSpecError("fuzzer span too short to place hidden bugs")
        counts = apportion(self.bug_count, self.factor_mix)
        if counts["blocking_bug"] > counts["never_hidden"]:
            raise WorldSpecError(
                "each blocking reveal needs a never-hidden blocker: "
                f"{counts['blocking_bug']} > {counts['never_hidden']}"
            )

    @classmethod
    def from_doc(cls, doc: dict) -> "WorldSpec":
        spec = cls()
        if "bugs" in doc:
            spec.bug_count = int(doc["bugs"])
        if "seed" in doc:
            spec.seed = int(doc["seed"])
        if "deterministic" in doc:
            spec.deterministic = bool(doc["deterministic"])
        if "factor_mix" in doc:
            spec.factor_mix = {k: float(v) for k, v in doc["factor_mix"].items()}
        if "find_probability" in doc:
            spec.find_probability = float(doc["find_probability"])
        if "mean_find_minutes" in doc:
            lo, hi = doc["mean_find_minutes"]
            spec.mean_find_minutes = (float(lo), float(hi))
        if "memory_leak_share" in doc:
            spec.memory_leak_share = float(doc["memory_leak_share"])
        if "block_probability" in doc:
            spec.block_probability = float(doc["block_probability"])
        if "unstable_density" in doc:
            spec.unstable_density = float(doc["unstable_density"])
        if "knee_vms" in doc:
            spec.knee_vms = int(doc["knee_vms"])
        if "decoy_families" in doc:
            spec.decoy_families = int(doc["decoy_families"])
        if "target_start" in doc:
            spec.target_start = dt.date.fromisoformat(str(doc["target_start"]))
        if "target_end" in doc:
            spec.target_end = dt.date.fromisoformat(str(doc["target_end"]))
        if "fuzzer_start" in doc:
            spec.fuzzer_start = dt.date.fromisoformat(str(doc["fuzzer_start"]))
        if "legacy_inout" in doc:
            spec.legacy_inout = bool(doc["legacy_inout"])
        return spec


def apportion(total: int, shares: dict) -> dict:
    """Largest-remainder apportionment; counts sum to ``total`` exactly."""
    ssum = float(sum(shares.values()))
    quotas = {k: total * v / ssum for k, v in shares.items()}
    counts = {k: math.floor(q) for k, q in quotas.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(shares, key=lambda k: (-(quotas[k] - counts[k]), k))
    for k in by_remainder[:leftover]:
        counts[k] += 1
    return counts


def _rand_day(rng: random.Random, lo: dt.date, hi: dt.date) -> dt.date:
    if hi < lo:
        raise WorldSpecError(f"empty day range {lo}..{hi}")
    return lo + dt.timedelta(days=rng.randrange((hi - lo).days + 1))


def _gen_axis(rng: random.Random, prefix: str, start: dt.date, end: dt.date, extra_p: float):
    """Oldest-first commit list with >=1 commit per day; ids count upward."""
    commits: list[Commit] = []
    counter = 0
    day = start
    while day <= end:
        n = 1
        if rng.random() < extra_p:
            n += 1
            if rng.random() < 0.25:
                n += 1
        for idx in range(n):
            path = rng.choice(_GENERIC_PATHS)
            commits.append(
                Commit(
                    id=f"{prefix}{counter:07d}",
                    day=day,
                    day_index=idx,
                    parents=(f"{prefix}{counter - 1:07d}",) if counter else (),
                    message=f"{path.split('/', 1)[0]}: {rng.choice(_GENERIC_MESSAGES)}",
                    touched_paths=(path,),
                )
            )
            counter += 1
        day += dt.timedelta(days=1)
    return commits


def _by_day(commits) -> dict:
    days: dict[dt.date, list[Commit]] = {}
    for c in commits:
        days.setdefault(c.day, []).append(c)
    return days


def _entity_family(tag: str, rng: random.Random, with_resource: bool):
    """Declarations for one bug: the reproducer call plus its dependencies."""
    n = rng.choice((4, 8, 16, 32))
    decls = {
        f"st_{tag}": f"st_{tag} {{\n\tf0\tint32\n\tf1\tarray[int8, {n}]\n}}",
        f"fl_{tag}": f"fl_{tag} = 1, 2, 4",
    }
    if with_resource:
        decls[f"res_{tag}"] = f"resource res_{tag}[intptr]"
        decls[f"open${tag}"] = f"open${tag}(flags flags[fl_{tag}]) res_{tag}"
        call = f"ioctl${tag}"
        decls[call] = f"ioctl${tag}(h res_{tag}, arg ptr[in, st_{tag}])"
    else:
        call = f"sendmsg${tag}"
        decls[call] = f"sendmsg${tag}(arg ptr[in, st_{tag}], opts flags[fl_{tag}])"
    return call, decls


def _edited_struct(tag: str, decls: dict) -> str:
    base = decls[f"st_{tag}"]
    return base.replace("\n}", "\n\tf2\tint64\n}")


class _Builder:
    def __init__(self, spec: WorldSpec):
        spec.validate()
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.target_commits = _gen_axis(
            self.rng, "t", spec.target_start, spec.target_end, extra_p=0.4
        )
        self.fuzzer_commits = _gen_axis(
            self.rng, "f", spec.fuzzer_start, spec.target_end, extra_p=0.25
        )
        self.t_days = _by_day(self.target_commits)
        self.f_days = _by_day(self.fuzzer_commits)
        self.t_pos = {c.id: i for i, c in enumerate(self.target_commits)}
        self.events: dict[str, dict[str, str]] = {}  # fuzzer commit id -> decls
        self.base_commit = self.fuzzer_commits[0]
        self.events[self.base_commit.id] = dict(BASE_DECLS)
        self.bugs: dict[str, BugTruth] = {}
        self.records: dict[str, BugRecord] = {}
        self.used_fixes: set[str] = set()
        self.special_target: dict[str, Commit] = {}  # id -> replacement commit

    # -- day helpers ---------------------------------------------------
    def last_target_of(self, day: dt.date) -> Commit:
        return self.t_days[day][-1]

    def any_target_of(self, day: dt.date) -> Commit:
        return self.rng.choice(self.t_days[day])

    def any_fuzzer_of(self, day: dt.date) -> Commit:
        return self.rng.choice(self.f_days[day])

    def plain_fuzzer_of(self, day: dt.date) -> Commit:
        options = [c for c in self.f_days[day] if c.id not in self.events]
        return self.rng.choice(options or self.f_days[day])

    def add_event(self, day: dt.date, decls: dict) -> Commit:
        commit = self.any_fuzzer_of(day)
        self.events.setdefault(commit.id, {}).update(decls)
        return commit

    def _unused_target_of(self, day: dt.date) -> Commit | None:
        options = [c for c in self.t_days[day] if c.id not in self.used_fixes]
        return self.rng.choice(options) if options else None

    def pick_fix_days(self, finding: dt.date, count: int = 1):
        """Unique fix commits after the finding date (shared fixes would
        merge unrelated bugs into one duplicate group)."""
        fixes = []
        for _ in range(count):
            want = min(
                finding + dt.timedelta(days=self.rng.randrange(20, 200)),
                self.spec.target_end,
            )
            commit = None
            day = want
            while commit is None and day <= self.spec.target_end:
                commit = self._unused_target_of(day)
                day += dt.timedelta(days=1)
            day = want - dt.timedelta(days=1)
            while commit is None and day > finding:
                commit = self._unused_target_of(day)
                day -= dt.timedelta(days=1)
            if commit is None:
                raise WorldSpecError("ran out of distinct fix commits after the finding date")
            self.used_fixes.add(commit.id)
            fixes.append(commit.id)
        return fixes

    # -- bug plumbing ---------------------------------------------------
    def crash_meta(self, tag: str, forced_kind: str | None = None):
        if forced_kind:
            kind = forced_kind
        elif self.rng.random() < self.spec.memory_leak_share:
            kind = "memory_leak"
        else:
            kind = self.rng.choice(("kasan", "kasan", "warning", "race", "other"))
        directory = self.rng.choice(_CRASH_DIRS)
        fn = f"{directory}_{tag}_handler"
        path = f"{directory}/{tag}.c"
        return kind, _TITLE_TEMPLATES[kind].format(fn=fn), path

    def mean_minutes(self) -> float:
        lo, hi = self.spec.mean_find_minutes
        return round(self.rng.uniform(lo, hi), 3)

    def record_bug(
        self,
        bug_id: str,
        tag: str,
        guilty: Commit,
        finding_day: dt.date,
        call: str,
        required: dict,
        revealing_axis: str,
        revealing_commit: str,
        revealing_day: dt.date,
        factor: str,
        blocking_bug_id: str | None = None,
        fixes=None,
        crash_kind: str | None = None,
    ):
        kind, title, path = self.crash_meta(tag, crash_kind)
        finding_commit = self.last_target_of(finding_day)
        d2_days = max((finding_day - revealing_day).days, 1)
        self.bugs[bug_id] = BugTruth(
            bug_id=bug_id,
            guilty_commit=guilty.id,
            revealing_axis=revealing_axis,
            revealing_commit=revealing_commit,
            factor=factor,
            required=required,
            find_probability=1.0 if self.spec.deterministic else self.spec.find_probability,
            mean_find_minutes=self.mean_minutes(),
            crash_kind=kind,
            d2_scale_days=float(d2_days),
            blocking_bug_id=blocking_bug_id,
            block_probability=self.spec.block_probability if blocking_bug_id else 0.0,
        )
        self.records[bug_id] = BugRecord(
            id=bug_id,
            title=title,
            finding_commit=finding_commit.id,
            finding_date=finding_day,
            guilty_commits=(guilty.id,),
            guilty_date=guilty.day,
            fix_commits=tuple(fixes if fixes is not None else self.pick_fix_days(finding_day)),
            reproducer_calls=(call,),
            crash_kind=kind,
            config="ci-upstream-main",
            crash_path=path,
        )

    def finding_day_after(self, reveal_day: dt.date) -> dt.date:
        gap = self.rng.randrange(5, 140)
        return min(reveal_day + dt.timedelta(days=gap), self.spec.target_end - dt.timedelta(days=5))

    # -- per-factor generators -------------------------------------------
    def gen_description_bug(self, bug_id: str, tag: str):
        spec = self.spec
        reveal_day = _rand_day(
            self.rng, SYZBOT_START + dt.timedelta(days=45), spec.target_end - dt.timedelta(days=160)
        )
        guilty_day = _rand_day(self.rng, spec.target_start + dt.timedelta(days=60),
                               reveal_day - dt.timedelta(days=45))
        guilty = self.any_target_of(guilty_day)
        call, decls = _entity_family(tag, self.rng, with_resource=self.rng.random() < 0.6)
        if self.rng.random() < 0.5:
            reveal_commit = self.add_event(reveal_day, decls)
        else:
            intro_day = _rand_day(self.rng, spec.fuzzer_start + dt.timedelta(days=10),
                                  reveal_day - dt.timedelta(days=30))
            self.add_event(intro_day, decls)
            reveal_commit = self.add_event(reveal_day, {f"st_{tag}": _edited_struct(tag, decls)})
        finding_day = self.finding_day_after(reveal_day)
        self.record_bug(
            bug_id, tag, guilty, finding_day, call,
            required={"description": reveal_commit.id, "target": guilty.id},
            revealing_axis="description",
            revealing_commit=reveal_commit.id,
            revealing_day=reveal_day,
            factor="description_commit",
        )

    def _intro_entities_early(self, tag: str, reveal_day: dt.date):
        call, decls = _entity_family(tag, self.rng, with_resource=self.rng.random() < 0.6)
        if self.rng.random() < 0.5:
            self.events[self.base_commit.id].update(decls)
            intro_commit = self.base_commit
        else:
            intro_day = _rand_day(
                self.rng,
                self.spec.fuzzer_start + dt.timedelta(days=10),
                reveal_day - dt.timedelta(days=40),
            )
            intro_commit = self.add_event(intro_day, decls)
        return call, intro_commit

    def gen_target_revealed_bug(self, bug_id: str, tag: str, sanitizer: bool):
        spec = self.spec
        reveal_day = _rand_day(
            self.rng, SYZBOT_START + dt.timedelta(days=45), spec.target_end - dt.timedelta(days=160)
        )
        guilty_day = _rand_day(self.rng, spec.target_start + dt.timedelta(days=60),
                               reveal_day - dt.timedelta(days=45))
        guilty = self.any_target_of(guilty_day)
        reveal_commit = self.any_target_of(reveal_day)
        if sanitizer:
            self.special_target[reveal_commit.id] = replace(
                reveal_commit, touched_paths=_SANITIZER_TOUCH, message=_SANITIZER_MESSAGE
            )
        call, _ = self._intro_entities_early(tag, reveal_day)
        finding_day = self.finding_day_after(reveal_day)
        self.record_bug(
            bug_id, tag, guilty, finding_day, call,
            required={"target": reveal_commit.id},
            revealing_axis="target",
            revealing_commit=reveal_commit.id,
            revealing_day=reveal_day,
            factor="sanitizer_commit" if sanitizer else "kernel_commit",
        )

    def gen_fuzzer_revealed_bug(self, bug_id: str, tag: str):
        spec = self.spec
        reveal_day = _rand_day(
            self.rng, SYZBOT_START + dt.timedelta(days=45), spec.target_end - dt.timedelta(days=160)
        )
        guilty_day = _rand_day(self.rng, spec.target_start + dt.timedelta(days=60),
                               reveal_day - dt.timedelta(days=45))
        guilty = self.any_target_of(guilty_day)
        reveal_commit = self.plain_fuzzer_of(reveal_day)
        call, _ = self._intro_entities_early(tag, reveal_day)
        finding_day = self.finding_day_after(reveal_day)
        self.record_bug(
            bug_id, tag, guilty, finding_day, call,
            required={"fuzzer": reveal_commit.id, "target": guilty.id},
            revealing_axis="fuzzer",
            revealing_commit=reveal_commit.id,
            revealing_day=reveal_day,
            factor="syzkaller_commit",
        )

    def gen_never_hidden_bug(self, bug_id: str, tag: str, early_guilty: bool = False):
        spec = self.spec
        hi = spec.target_end - dt.timedelta(days=170)
        if early_guilty:
            guilty_day = _rand_day(self.rng, spec.target_start + dt.timedelta(days=30),
                                   spec.fuzzer_start - dt.timedelta(days=30))
        else:
            guilty_day = _rand_day(self.rng, spec.target_start + dt.timedelta(days=60), hi)
        guilty = self.any_target_of(guilty_day)
        call, decls = _entity_family(tag, self.rng, with_resource=self.rng.random() < 0.6)
        self.events[self.base_commit.id].update(decls)
        reveal_day = max(guilty_day, SYZBOT_START)
        finding_day = self.finding_day_after(reveal_day + dt.timedelta(days=3))
        self.record_bug(
            bug_id, tag, guilty, finding_day, call,
            required={"target": guilty.id},
            revealing_axis="target",
            revealing_commit=guilty.id,
            revealing_day=reveal_day,
            factor="never_hidden",
        )
        return bug_id

    def gen_blocked_bug(self, bug_id: str, tag: str, blocker_id: str, blocker_tag: str):
        """One blocked bug plus its blocker (a never-hidden bug fixed later)."""
        spec = self.spec
        reveal_day = _rand_day(
            self.rng, SYZBOT_START + dt.timedelta(days=60), spec.target_end - dt.timedelta(days=160)
        )
        blocker_fix = None
        day = reveal_day
        while blocker_fix is None and day <= spec.target_end - dt.timedelta(days=150):
            blocker_fix = self._unused_target_of(day)
            day += dt.timedelta(days=1)
        if blocker_fix is None:
            raise WorldSpecError("no free commit for a blocker fix near the drawn reveal day")
        self.used_fixes.add(blocker_fix.id)
        reveal_day = blocker_fix.day

        guilty_day = _rand_day(self.rng, spec.fuzzer_start + dt.timedelta(days=5),
                               reveal_day - dt.timedelta(days=45))
        guilty = self.any_target_of(guilty_day)

        # the blocker: never hidden, introduced before the fuzzer existed,
        # found well before its fix lands
        blocker_guilty_day = _rand_day(self.rng, spec.target_start + dt.timedelta(days=30),
                                       spec.fuzzer_start - dt.timedelta(days=30))
        blocker_guilty = self.any_target_of(blocker_guilty_day)
        blocker_find_day = _rand_day(self.rng, SYZBOT_START + dt.timedelta(days=5),
                                     reveal_day - dt.timedelta(days=10))
        blocker_call, blocker_decls = _entity_family(blocker_tag, self.rng, with_resource=True)
        self.events[self.base_commit.id].update(blocker_decls)
        self.record_bug(
            blocker_id, blocker_tag, blocker_guilty, blocker_find_day, blocker_call,
            required={"target": blocker_guilty.id},
            revealing_axis="target",
            revealing_commit=blocker_guilty.id,
            revealing_day=max(blocker_guilty_day, SYZBOT_START),
            factor="never_hidden",
            fixes=[blocker_fix.id],
            crash_kind="warning",
        )

        call, _ = self._intro_entities_early(tag, reveal_day)
        finding_day = self.finding_day_after(reveal_day)
        self.record_bug(
            bug_id, tag, guilty, finding_day, call,
            required={"target": blocker_fix.id},
            revealing_axis="target",
            revealing_commit=blocker_fix.id,
            revealing_day=reveal_day,
            factor="blocking_bug",
            blocking_bug_id=blocker_id,
        )

    def gen_decoys(self):
        for i in range(self.spec.decoy_families):
            tag = f"dec{i:03d}"
            call, decls = _entity_family(tag, self.rng, with_resource=self.rng.random() < 0.3)
            intro_day = _rand_day(
                self.rng,
                self.spec.fuzzer_start + dt.timedelta(days=5),
                self.spec.target_end - dt.timedelta(days=30),
            )
            self.add_event(intro_day, decls)
            if self.rng.random() < 0.5:
                edit_day = _rand_day(self.rng, intro_day, self.spec.target_end - dt.timedelta(days=10))
                self.add_event(edit_day, {f"st_{tag}": _edited_struct(tag, decls)})

    # -- assembly ---------------------------------------------------------
    def build(self) -> SyntheticWorld:
        spec = self.spec
        counts = apportion(spec.bug_count, spec.factor_mix)
        # each blocked bug brings its blocker, and blockers are never-hidden
        # bugs, so the standalone never-hidden quota shrinks accordingly
        plan: list[str] = []
        for factor in FACTOR_MIX_KEYS:
            n = counts[factor]
            if factor == "never_hidden":
                n -= counts["blocking_bug"]
            plan.extend([factor] * n)
        self.rng.shuffle(plan)

        bug_no = 0
        for factor in plan:
            bug_no += 1
            bug_id = f"bug-{bug_no:04d}"
            tag = f"b{bug_no:04d}"
            if factor == "description_commit":
                self.gen_description_bug(bug_id, tag)
            elif factor == "kernel_commit":
                self.gen_target_revealed_bug(bug_id, tag, sanitizer=False)
            elif factor == "sanitizer_commit":
                self.gen_target_revealed_bug(bug_id, tag, sanitizer=True)
            elif factor == "syzkaller_commit":
                self.gen_fuzzer_revealed_bug(bug_id, tag)
            elif factor == "blocking_bug":
                bug_no += 1
                self.gen_blocked_bug(bug_id, tag, f"bug-{bug_no:04d}", f"b{bug_no:04d}")
            elif factor == "never_hidden":
                self.gen_never_hidden_bug(bug_id, tag, early_guilty=self.rng.random() < 0.3)

        self.gen_decoys()

        target_commits = [
            self.special_target.get(c.id, c) for c in self.target_commits
        ]

        unstable: dict[str, dict[str, str]] = {"target": {}, "fuzzer": {}}
        if spec.unstable_density > 0:
            protected = set(self.events)
            for truth in self.bugs.values():
                protected.add(truth.guilty_commit)
                protected.add(truth.revealing_commit)
                protected.update(truth.required.values())
            for rec in self.records.values():
                protected.add(rec.finding_commit)
                protected.update(rec.fix_commits)
            for kind, commits in (("target", target_commits), ("fuzzer", self.fuzzer_commits)):
                for c in commits:
                    if c.id not in protected and self.rng.random() < spec.unstable_density:
                        unstable[kind][c.id] = self.rng.choice(UNSTABLE_REASONS)

        target_axis = CommitAxis("target", list(reversed(target_commits)), unstable["target"])
        fuzzer_axis = CommitAxis("fuzzer", list(reversed(self.fuzzer_commits)), unstable["fuzzer"])

        events_ordered = sorted(
            self.events.items(), key=lambda kv: -fuzzer_axis.index_of(kv[0])
        )  # oldest -> newest

        year_span = (spec.target_end - spec.target_start).days // 4
        cuts = [spec.target_start + dt.timedelta(days=year_span * i) for i in range(4)]
        cuts.append(spec.target_end + dt.timedelta(days=1))
        toolchains = ToolchainTable.from_rows(
            [
                [cuts[i].isoformat(), cuts[i + 1].isoformat(), f"gcc-{7 + i}"]
                for i in range(4)
            ]
        )
        mid = self.target_commits[len(self.target_commits) // 2]
        patch_rules = PatchRuleTable.from_rows(
            [
                ["target", self.target_commits[0].id, mid.id, "force-2mb-pages"],
                ["fuzzer", self.fuzzer_commits[0].id,
                 self.fuzzer_commits[len(self.fuzzer_commits) // 3].id, "qemu-cpu-host"],
            ]
        )

        return SyntheticWorld(
            target_axis=target_axis,
            fuzzer_axis=fuzzer_axis,
            description_events=[(cid, decls) for cid, decls in events_ordered],
            bugs=self.bugs,
            records=self.records,
            toolchains=toolchains,
            patch_rules=patch_rules,
            knee_vms=spec.knee_vms,
            deterministic=spec.deterministic,
            seed=spec.seed,
            unstable={k: frozenset(v) for k, v in unstable.items()},
            legacy_inout=spec.legacy_inout,
        )


def generate_world(spec: WorldSpec) -> SyntheticWorld:
    """Build a reproducible synthetic world honoring the parameters exactly."""
    return _Builder(spec).build()
