"""Independent oracles and fixture generators used across the test suite.

These deliberately re-derive results through different code paths than the
library (recursive walks, linear scans, day stepping, a from-scratch
focused-set validator) so the tests check answers, not implementations.
"""

from __future__ import annotations

import datetime as dt
import random

from retrofuzz.history import Commit
from retrofuzz.syzlang import (
    DescriptionCorpus,
    Entity,
    FocusedSet,
    TypeExpr,
    parse_descriptions,
)

# ---------------------------------------------------------------------------
# first-parent walk, written recursively

def recursive_first_parent(by_id: dict[str, Commit], head: str) -> list[str]:
    node = by_id[head]
    if not node.parents:
        return [head]
    return [head] + recursive_first_parent(by_id, node.parents[0])


def make_merge_dag(rng: random.Random, mainline_len: int = 200):
    """A mainline chain with side branches merged in.

    Returns (all commits, head id, expected mainline ids newest->oldest).
    First parents always point along the mainline, so the linearized walk
    must recover exactly the mainline.
    """
    start = dt.date(2019, 1, 1)
    commits: list[Commit] = []
    mainline: list[Commit] = []
    side_serial = 0
    for i in range(mainline_len):
        day = start + dt.timedelta(days=i // 2)
        parents: list[str] = []
        if mainline:
            parents.append(mainline[-1].id)
        if mainline and rng.random() < 0.3:
            # graft a short side branch rooted somewhere older
            root = rng.choice(mainline).id
            branch: list[Commit] = []
            for k in range(rng.randrange(1, 4)):
                side_serial += 1
                sid = f"side{side_serial:05d}"
                sparents = (branch[-1].id,) if branch else (root,)
                branch.append(
                    Commit(sid, day, 50 + k, sparents, message="side work")
                )
            commits.extend(branch)
            parents.append(branch[-1].id)
        c = Commit(f"main{i:05d}", day, i % 2, tuple(parents), message="mainline")
        commits.append(c)
        mainline.append(c)
    expected = [c.id for c in reversed(mainline)]
    return commits, mainline[-1].id, expected


# ---------------------------------------------------------------------------
# calendar-day counting by stepping, not subtraction

def day_count_oracle(a: dt.date, b: dt.date) -> int:
    if b < a:
        raise ValueError("b precedes a")
    n = 0
    cur = a
    while cur < b:
        cur += dt.timedelta(days=1)
        n += 1
    return n


# ---------------------------------------------------------------------------
# from-scratch focused-set validator

def _resolve_type(fs: FocusedSet, name: str) -> Entity | None:
    return fs.types.get(name)


def _walk_for_resources(fs: FocusedSet, expr: TypeExpr, direction: str, found: dict, seen):
    """Collect resource roles reachable from a type expression.

    Handles the constructs the test corpora use: ptr direction arguments,
    struct/union members (no explicit attributes), aliases, template args.
    """
    if expr.name in ("ptr", "ptr64") and expr.args:
        head = expr.args[0]
        child_dir = direction
        rest = expr.args
        if isinstance(head, TypeExpr) and head.name in ("in", "out", "inout"):
            child_dir = head.name
            rest = expr.args[1:]
        for a in rest:
            if isinstance(a, TypeExpr):
                _walk_for_resources(fs, a, child_dir, found, seen)
        return
    ent = _resolve_type(fs, expr.name)
    if ent is not None and (ent.name, direction) not in seen:
        seen = seen | {(ent.name, direction)}
        if ent.kind == "resource":
            roles = found.setdefault(ent.name, set())
            if direction in ("in", "inout"):
                roles.add("consumer")
            if direction in ("out", "inout"):
                roles.add("producer")
        elif ent.kind in ("struct", "union"):
            for m in ent.members:
                d = m.direction if m.direction != "unspecified" else direction
                _walk_for_resources(fs, m.type, d, found, seen)
        elif ent.kind == "typealias":
            _walk_for_resources(fs, ent.alias, direction, found, seen)
    for a in expr.args:
        if isinstance(a, TypeExpr) and a.name not in ("in", "out", "inout"):
            _walk_for_resources(fs, a, direction, found, seen)


def focused_set_problems(fs: FocusedSet) -> list[str]:
    """Every reference resolves inside the set, every resource is two-sided,
    and the seed and mandatory calls are present."""
    problems = []
    for name in fs.seed_calls:
        if name not in fs.calls:
            problems.append(f"seed {name} missing")
    for name in fs.mandatory_calls:
        if name not in fs.calls:
            problems.append(f"mandatory {name} missing")
    for ent in list(fs.calls.values()) + list(fs.types.values()):
        for ref in ent.referenced_names():
            if ref not in fs.types:
                problems.append(f"{ent.name} references {ref} outside the set")
    sides: dict[str, set] = {}
    for call in fs.calls.values():
        found: dict[str, set] = {}
        for m in call.members:
            _walk_for_resources(fs, m.type, "in", found, frozenset())
        if call.produces:
            found.setdefault(call.produces, set()).add("producer")
        for res, roles in found.items():
            sides.setdefault(res, set()).update(roles)
    for name, ent in fs.types.items():
        if ent.kind != "resource":
            continue
        got = sides.get(name, set())
        if "producer" not in got:
            problems.append(f"resource {name} lacks a producer")
        if "consumer" not in got:
            problems.append(f"resource {name} lacks a consumer")
    return problems


def delete_call(fs: FocusedSet, name: str) -> FocusedSet:
    calls = dict(fs.calls)
    del calls[name]
    return FocusedSet(
        calls=calls,
        types=dict(fs.types),
        seed_calls=fs.seed_calls,
        mandatory_calls=fs.mandatory_calls,
        legacy_inout=fs.legacy_inout,
    )


# ---------------------------------------------------------------------------
# random description corpora

MANDATORY_STUBS = """
mmap(addr intptr, len intptr, prot int32, flags int32, fd int32, off intptr)
syz_execute_func(text ptr[in, exec_blob])
exec_blob {
\tcode\tarray[int8, 64]
}
"""


def random_corpus_text(rng: random.Random, families: int | None = None) -> str:
    """A corpus of resource families, helper types, and seed-able calls.

    Every resource has at least one resource-free producer and consumer so
    focused sets stay locally minimal; chained producers exist to exercise
    the no-new-resources preference.
    """
    families = families or rng.randrange(8, 36)
    blocks = [MANDATORY_STUBS]
    for i in range(families):
        t = f"fam{i:03d}"
        blocks.append(f"resource r_{t}[intptr]")
        blocks.append(f"mkfl_{t} = 1, 2, 8")
        blocks.append(f"make_{t}(flags flags[mkfl_{t}]) r_{t}")
        blocks.append(f"use_{t}(h r_{t})")
        if rng.random() < 0.5:
            blocks.append(f"grab_{t}(dst ptr[out, r_{t}])")
        if rng.random() < 0.4 and i > 0:
            prev = f"fam{rng.randrange(i):03d}"
            blocks.append(f"chain_{t}(h r_{prev}) r_{t}")
        blocks.append(f"box_{t} {{\n\tv\tint32\n\th\tr_{t}\n}}")
        if rng.random() < 0.5:
            blocks.append(f"st_{t} {{\n\ta\tint64\n\tb\tarray[int8, {rng.choice((4, 16))}]\n}}")
            blocks.append(f"call_{t}(arg ptr[in, st_{t}], h r_{t})")
        else:
            blocks.append(f"call_{t}(arg ptr[in, box_{t}])")
    return "\n".join(blocks) + "\n"


def random_corpus(rng: random.Random, families: int | None = None) -> DescriptionCorpus:
    return parse_descriptions([("random.txt", random_corpus_text(rng, families))])


def seed_calls_for(corpus: DescriptionCorpus, rng: random.Random, k: int = 2) -> list[str]:
    calls = sorted(n for n in corpus.calls if n.startswith("call_"))
    return rng.sample(calls, min(k, len(calls)))
