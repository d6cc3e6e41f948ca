"""Syscall-description parsing, dependency resolution, and focused subsets.

Handles the declaration subset the retrospection pipeline needs: syscalls,
structs, unions, resources, flag sets, and type aliases, with nested type
templates, direction attributes, and comments. Conditional includes and
define-macros are assumed pre-expanded at ingestion.

Focusing narrows a full corpus to the minimal closed subset needed to
reproduce one bug: the reproducer's calls, everything they reference, and one
producer plus one consumer for every resource in the set. Selected entities
are never modified, only selected.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

DIRECTIONS = ("in", "out", "inout")

ENTITY_KINDS = ("syscall", "struct", "union", "resource", "flagset", "typealias")

DEFAULT_MANDATORY_CALLS = ("mmap", "syz_execute_func")

# Type heads that never name a corpus entity. ``len``-style templates take a
# field reference as their first argument, not an entity name.
BUILTIN_TYPES = frozenset(
    {
        "intptr", "int8", "int16", "int32", "int64", "int8be", "int16be",
        "int32be", "int64be", "ptr", "ptr64", "array", "const", "flags",
        "len", "bytesize", "offsetof", "string", "stringnoz", "buffer",
        "bool8", "bool16", "bool32", "bool64", "void", "fmt", "proc", "vma",
        "filename", "fileoff", "csum", "text",
    }
)

_FIELD_REF_HEADS = frozenset({"len", "bytesize", "offsetof"})

_IDENT = r"[A-Za-z_][A-Za-z0-9_$]*"
_IDENT_RE = re.compile(_IDENT)
_FLAGSET_RE = re.compile(rf"^({_IDENT})\s*=\s*(.+)$")
_SYSCALL_RE = re.compile(rf"^({_IDENT})\s*\(")
_BLOCK_OPEN_RE = re.compile(rf"^({_IDENT})\s*([{{\[])\s*$")
_RESOURCE_RE = re.compile(rf"^resource\s+({_IDENT})\s*\[(.+)\]\s*$")
_ALIAS_RE = re.compile(rf"^type\s+({_IDENT})\s+(.+)$")
_DIR_SUFFIX_RE = re.compile(r"\((in|out|inout)\)\s*$")


class SyzlangError(Exception):
    pass


class ParseError(SyzlangError):
    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class DuplicateDeclarationError(SyzlangError):
    pass


class ResolutionError(SyzlangError):
    """A referenced symbol cannot be resolved in the corpus."""

    def __init__(self, symbol: str, referrer: str = ""):
        detail = f" (referenced by {referrer})" if referrer else ""
        super().__init__(f"unresolved name {symbol!r}{detail}")
        self.symbol = symbol


class UnsatisfiableResourceError(SyzlangError):
    pass


class CorpusIncompleteError(SyzlangError):
    pass


class NeverDescribableError(SyzlangError):
    """No description snapshot ever contained the reproducer's calls."""


@dataclass(frozen=True)
class TypeExpr:
    """A type expression: a head name with optional positional arguments.

    Arguments are nested expressions, integer literals, or quoted strings.
    """

    name: str
    args: tuple = ()

    def render(self) -> str:
        if not self.args:
            return self.name
        parts = []
        for a in self.args:
            if isinstance(a, TypeExpr):
                parts.append(a.render())
            elif isinstance(a, str):
                parts.append(f'"{a}"')
            else:
                parts.append(str(a))
        return f"{self.name}[{', '.join(parts)}]"


@dataclass(frozen=True)
class Member:
    name: str
    type: TypeExpr
    direction: str = "unspecified"


@dataclass(frozen=True)
class Entity:
    """One declaration. Kind-specific payloads stay None/() when unused."""

    name: str
    kind: str
    members: tuple[Member, ...] = ()
    produces: str | None = None
    base: TypeExpr | None = None
    values: tuple[str, ...] = ()
    alias: TypeExpr | None = None
    source_commit: str = ""

    def normalized(self) -> str:
        """Canonical single-declaration text; member order is preserved."""
        if self.kind == "resource":
            return f"resource {self.name}[{self.base.render()}]"
        if self.kind == "typealias":
            return f"type {self.name} {self.alias.render()}"
        if self.kind == "flagset":
            return f"{self.name} = {', '.join(self.values)}"
        if self.kind == "syscall":
            args = ", ".join(f"{m.name} {m.type.render()}" for m in self.members)
            tail = f" {self.produces}" if self.produces else ""
            return f"{self.name}({args}){tail}"
        open_ch, close_ch = ("{", "}") if self.kind == "struct" else ("[", "]")
        lines = [f"{self.name} {open_ch}"]
        for m in self.members:
            suffix = f"\t({m.direction})" if m.direction != "unspecified" else ""
            lines.append(f"\t{m.name}\t{m.type.render()}{suffix}")
        lines.append(close_ch)
        return "\n".join(lines)

    def type_exprs(self):
        if self.base is not None:
            yield self.base
        if self.alias is not None:
            yield self.alias
        for m in self.members:
            yield m.type

    def referenced_names(self) -> set[str]:
        names: set[str] = set()
        for expr in self.type_exprs():
            _collect_names(expr, names)
        if self.produces:
            names.add(self.produces)
        return names


def _collect_names(expr: TypeExpr, out: set[str]) -> None:
    if expr.name not in BUILTIN_TYPES and expr.name not in DIRECTIONS:
        out.add(expr.name)
    args = expr.args
    if expr.name in _FIELD_REF_HEADS:
        args = args[1:]
    for a in args:
        if isinstance(a, TypeExpr):
            _collect_names(a, out)


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def parse_type_expr(text: str, where: str = "<expr>") -> TypeExpr:
    expr, pos = _parse_expr(text, 0, where)
    if text[pos:].strip():
        raise SyzlangError(f"{where}: trailing text after type expression: {text[pos:].strip()!r}")
    return expr


def _parse_expr(text: str, pos: int, where: str):
    while pos < len(text) and text[pos].isspace():
        pos += 1
    m = _IDENT_RE.match(text, pos)
    if not m:
        raise SyzlangError(f"{where}: expected a type name at {text[pos:pos + 12]!r}")
    name = m.group(0)
    pos = m.end()
    if pos < len(text) and text[pos] == "[":
        args, pos = _parse_args(text, pos + 1, where)
        return TypeExpr(name, tuple(args)), pos
    return TypeExpr(name), pos


def _parse_args(text: str, pos: int, where: str):
    args: list = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            raise SyzlangError(f"{where}: unterminated '[' in type expression")
        ch = text[pos]
        if ch == "]":
            return args, pos + 1
        if ch == '"':
            end = text.find('"', pos + 1)
            if end < 0:
                raise SyzlangError(f"{where}: unterminated string literal")
            args.append(text[pos + 1 : end])
            pos = end + 1
        elif ch.isdigit() or ch == "-":
            m = re.match(r"-?(?:0x[0-9a-fA-F]+|\d+)", text[pos:])
            if not m:
                raise SyzlangError(f"{where}: bad numeric literal at {text[pos:pos + 8]!r}")
            args.append(int(m.group(0), 0))
            pos += m.end()
        else:
            expr, pos = _parse_expr(text, pos, where)
            args.append(expr)
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos < len(text) and text[pos] == ",":
            pos += 1
        elif pos < len(text) and text[pos] == "]":
            return args, pos + 1
        elif pos >= len(text):
            raise SyzlangError(f"{where}: unterminated '[' in type expression")


def _split_top_level(text: str, sep: str = ","):
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _parse_member(line: str, where: str) -> Member:
    direction = "unspecified"
    m = _DIR_SUFFIX_RE.search(line)
    if m:
        direction = m.group(1)
        line = line[: m.start()].rstrip()
    bits = line.split(None, 1)
    if len(bits) != 2:
        raise SyzlangError(f"{where}: expected 'name type' in member {line!r}")
    return Member(bits[0], parse_type_expr(bits[1], where), direction)


class DescriptionCorpus:
    """All parsed entities of one description snapshot.

    Syscalls and non-syscall entities live in separate namespaces, matching
    how type expressions and reproducers resolve names. ``legacy_inout``
    selects the historical direction semantics where an ``inout`` pointer
    makes every child object count as both input and output.
    """

    def __init__(self, legacy_inout: bool = False):
        self.calls: dict[str, Entity] = {}
        self.types: dict[str, Entity] = {}
        self.legacy_inout = legacy_inout
        self.diagnostics: list[str] = []
        self._usage_cache: dict[str, dict[str, str]] = {}
        self._producer_index: dict[str, list[str]] | None = None
        self._consumer_index: dict[str, list[str]] | None = None

    def add(self, entity: Entity, where: str = "<corpus>") -> None:
        ns = self.calls if entity.kind == "syscall" else self.types
        if entity.name in ns:
            raise DuplicateDeclarationError(
                f"{where}: duplicate declaration of {entity.name!r}"
            )
        ns[entity.name] = entity

    def lookup_any(self, name: str) -> Entity | None:
        return self.calls.get(name) or self.types.get(name)

    def all_entities(self):
        yield from self.calls.values()
        yield from self.types.values()

    def check_references(self) -> None:
        """Record unresolved references as diagnostics (never fatal)."""
        for ent in self.all_entities():
            for ref in ent.referenced_names():
                if ref not in self.types and not (
                    ent.kind == "syscall" and ref == ent.produces and ref in self.types
                ):
                    if ref not in self.types:
                        self.diagnostics.append(
                            f"unresolved name {ref!r} referenced by {ent.name!r}"
                        )

    def _build_usage_indexes(self) -> None:
        prod: dict[str, list[str]] = {}
        cons: dict[str, list[str]] = {}
        for name in sorted(self.calls):
            try:
                usage = resource_usage(self.calls[name], self)
            except ResolutionError:
                continue
            for res, role in usage.items():
                if role in ("producer", "both"):
                    prod.setdefault(res, []).append(name)
                if role in ("consumer", "both"):
                    cons.setdefault(res, []).append(name)
        self._producer_index = prod
        self._consumer_index = cons

    def producers_of(self, resource: str) -> list[str]:
        if self._producer_index is None:
            self._build_usage_indexes()
        return self._producer_index.get(resource, [])

    def consumers_of(self, resource: str) -> list[str]:
        if self._consumer_index is None:
            self._build_usage_indexes()
        return self._consumer_index.get(resource, [])


def parse_descriptions(sources, legacy_inout: bool = False) -> DescriptionCorpus:
    """Parse ``(path, text)`` pairs into one corpus.

    Grammar errors raise :class:`ParseError` with file and line; duplicate
    declarations raise :class:`DuplicateDeclarationError`. Unresolved
    references are recorded as diagnostics so a partially broken snapshot can
    still be inspected.
    """
    corpus = DescriptionCorpus(legacy_inout=legacy_inout)
    for path, text in sources:
        _parse_one(corpus, str(path), text)
    corpus.check_references()
    return corpus


def _parse_one(corpus: DescriptionCorpus, path: str, text: str) -> None:
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = _strip_comment(lines[i]).strip()
        i += 1
        if not line:
            continue
        where = f"{path}:{lineno}"

        m = _RESOURCE_RE.match(line)
        if m:
            base = parse_type_expr(m.group(2), where)
            corpus.add(Entity(m.group(1), "resource", base=base), where)
            continue

        m = _ALIAS_RE.match(line)
        if m:
            corpus.add(
                Entity(m.group(1), "typealias", alias=parse_type_expr(m.group(2), where)),
                where,
            )
            continue

        m = _BLOCK_OPEN_RE.match(line)
        if m:
            kind = "struct" if m.group(2) == "{" else "union"
            closer = "}" if kind == "struct" else "]"
            members = []
            while True:
                if i >= len(lines):
                    raise ParseError(path, lineno, f"unterminated {kind} {m.group(1)!r}")
                body_no = i + 1
                body = _strip_comment(lines[i]).strip()
                i += 1
                if body == closer:
                    break
                if not body:
                    continue
                members.append(_parse_member(body, f"{path}:{body_no}"))
            corpus.add(Entity(m.group(1), kind, members=tuple(members)), where)
            continue

        m = _SYSCALL_RE.match(line)
        if m:
            close = line.rfind(")")
            if close < 0:
                raise ParseError(path, lineno, f"unterminated argument list in {line!r}")
            arg_text = line[m.end() : close]
            trailer = line[close + 1 :].strip()
            members = []
            for raw_arg in _split_top_level(arg_text):
                bits = raw_arg.split(None, 1)
                if len(bits) != 2:
                    raise ParseError(path, lineno, f"expected 'name type' argument, got {raw_arg!r}")
                members.append(Member(bits[0], parse_type_expr(bits[1], where)))
            produces = None
            if trailer:
                if not re.fullmatch(_IDENT, trailer):
                    raise ParseError(path, lineno, f"bad return resource {trailer!r}")
                produces = trailer
            corpus.add(Entity(m.group(1), "syscall", members=tuple(members), produces=produces), where)
            continue

        m = _FLAGSET_RE.match(line)
        if m:
            values = tuple(v.strip() for v in m.group(2).split(",") if v.strip())
            if not values:
                raise ParseError(path, lineno, f"flag set {m.group(1)!r} has no values")
            corpus.add(Entity(m.group(1), "flagset", values=values), where)
            continue

        raise ParseError(path, lineno, f"unrecognized declaration {line!r}")


def _role_for_context(ctx: str) -> set[str]:
    if ctx == "in":
        return {"consumer"}
    if ctx == "out":
        return {"producer"}
    return {"consumer", "producer"}  # inout / legacy both


def resource_usage(call: Entity, corpus: DescriptionCorpus) -> dict[str, str]:
    """Classify every resource reachable from a syscall as producer/consumer/both.

    Direction context starts as ``in`` (arguments are inputs), is replaced by
    a pointer's direction argument, and is overridden by an explicit member
    attribute. In legacy mode an ``inout`` context makes the whole subtree
    count as both directions regardless of attributes; in modern mode the
    child's own attribute wins. A syscall's return resource is a producer.
    """
    if call.kind != "syscall":
        raise SyzlangError(f"{call.name!r} is not a syscall")
    cached = corpus._usage_cache.get(call.name)
    if cached is not None:
        return cached

    roles: dict[str, set[str]] = {}
    legacy = corpus.legacy_inout

    def add(res: str, ctx: str) -> None:
        roles.setdefault(res, set()).update(_role_for_context(ctx))

    def walk_expr(expr: TypeExpr, ctx: str, seen: frozenset) -> None:
        if expr.name == "ptr" or expr.name == "ptr64":
            child_ctx = ctx
            rest = expr.args
            if expr.args and isinstance(expr.args[0], TypeExpr) and expr.args[0].name in DIRECTIONS:
                if ctx != "both":
                    child_ctx = expr.args[0].name
                    if legacy and child_ctx == "inout":
                        child_ctx = "both"
                rest = expr.args[1:]
            for a in rest:
                if isinstance(a, TypeExpr):
                    walk_expr(a, child_ctx, seen)
            return

        ent = corpus.types.get(expr.name)
        if ent is None and expr.name not in BUILTIN_TYPES:
            raise ResolutionError(expr.name, call.name)
        if ent is not None:
            if not expr.args:
                walk_entity(ent, ctx, seen)
            else:
                # templated reference: direction of template-argument
                # resources follows the enclosing member's context
                walk_entity(ent, ctx, seen)
                corpus.diagnostics.append(
                    f"template arguments on {expr.name!r} in {call.name!r}: "
                    f"propagating enclosing direction {ctx!r}"
                )
        args = expr.args
        if expr.name in _FIELD_REF_HEADS:
            args = args[1:]
        for a in args:
            if isinstance(a, TypeExpr):
                arg_ent = corpus.types.get(a.name)
                if arg_ent is not None and arg_ent.kind == "resource" and expr.name != "ptr":
                    corpus.diagnostics.append(
                        f"resource {a.name!r} passed as template argument in "
                        f"{call.name!r}: propagating enclosing direction {ctx!r}"
                    )
                walk_expr(a, ctx, seen)

    def walk_entity(ent: Entity, ctx: str, seen: frozenset) -> None:
        key = (ent.name, ctx)
        if key in seen:
            return
        seen = seen | {key}
        if ent.kind == "resource":
            add(ent.name, ctx)
            return
        if ent.kind == "typealias":
            walk_expr(ent.alias, ctx, seen)
            return
        if ent.kind in ("struct", "union"):
            for m in ent.members:
                if legacy and ctx in ("inout", "both"):
                    child_ctx = "both"
                elif m.direction != "unspecified":
                    child_ctx = m.direction
                else:
                    child_ctx = ctx
                walk_expr(m.type, child_ctx, seen)

    for m in call.members:
        walk_expr(m.type, "in", frozenset())
    if call.produces:
        ent = corpus.types.get(call.produces)
        if ent is None or ent.kind != "resource":
            raise ResolutionError(call.produces, call.name)
        add(call.produces, "out")

    flat = {
        res: ("both" if len(rs) == 2 else next(iter(rs)))
        for res, rs in roles.items()
    }
    corpus._usage_cache[call.name] = flat
    return flat


@dataclass(frozen=True)
class FocusedSet:
    """The minimal closed description subset for one reproducer."""

    calls: dict[str, Entity]
    types: dict[str, Entity]
    seed_calls: tuple[str, ...]
    mandatory_calls: tuple[str, ...]
    legacy_inout: bool = False

    def entity_names(self) -> set[str]:
        return set(self.calls) | set(self.types)

    def export_text(self) -> str:
        """Normalized single-file form: resources, types, syscalls, alphabetized."""
        resources = sorted(n for n, e in self.types.items() if e.kind == "resource")
        others = sorted(n for n, e in self.types.items() if e.kind != "resource")
        calls = sorted(self.calls)
        blocks = [self.types[n].normalized() for n in resources]
        blocks += [self.types[n].normalized() for n in others]
        blocks += [self.calls[n].normalized() for n in calls]
        return "\n\n".join(blocks) + "\n"

    def identity_hash(self) -> str:
        return hashlib.sha256(self.export_text().encode()).hexdigest()

    def problems(self, corpus: DescriptionCorpus) -> list[str]:
        """Runtime sanity checks over the selected subset."""
        out = []
        names = self.entity_names()
        for ent in list(self.calls.values()) + list(self.types.values()):
            for ref in ent.referenced_names():
                if ref not in self.types:
                    out.append(f"{ent.name!r} references {ref!r} outside the set")
        for name in self.seed_calls:
            if name not in self.calls:
                out.append(f"seed call {name!r} missing")
        for name in self.mandatory_calls:
            if name not in self.calls:
                out.append(f"mandatory call {name!r} missing")
        sides = _resource_sides(self.calls.values(), corpus)
        for name, ent in self.types.items():
            if ent.kind != "resource":
                continue
            got = sides.get(name, set())
            if "producer" not in got:
                out.append(f"resource {name!r} has no producer in the set")
            if "consumer" not in got:
                out.append(f"resource {name!r} has no consumer in the set")
        return out


def _resource_sides(calls, corpus: DescriptionCorpus) -> dict[str, set[str]]:
    sides: dict[str, set[str]] = {}
    for call in calls:
        for res, role in resource_usage(call, corpus).items():
            s = sides.setdefault(res, set())
            if role in ("producer", "both"):
                s.add("producer")
            if role in ("consumer", "both"):
                s.add("consumer")
    return sides


def focus(
    corpus: DescriptionCorpus,
    reproducer_calls,
    mandatory_calls=DEFAULT_MANDATORY_CALLS,
) -> FocusedSet:
    """Compute the focused description subset for a reproducer.

    Iterates to a fixed point: pull in seed and mandatory calls, close over
    every referenced entity, then give each resource that lacks a producer or
    consumer exactly one completing syscall, preferring candidates whose own
    closure drags in no new resources (smallest name breaks ties).
    """
    seeds = tuple(reproducer_calls)
    mandatory = tuple(mandatory_calls)
    for name in mandatory:
        if name not in corpus.calls:
            raise CorpusIncompleteError(f"mandatory call {name!r} not in corpus")
    for name in seeds:
        if name not in corpus.calls:
            raise ResolutionError(name, "reproducer")

    calls: dict[str, Entity] = {}
    types: dict[str, Entity] = {}

    def absorb(name: str, referrer: str) -> None:
        if name in calls or name in types:
            return
        ent = corpus.types.get(name)
        if ent is None:
            raise ResolutionError(name, referrer)
        types[name] = ent
        for ref in sorted(ent.referenced_names()):
            absorb(ref, name)

    def add_call(name: str) -> None:
        if name in calls:
            return
        calls[name] = corpus.calls[name]
        for ref in sorted(calls[name].referenced_names()):
            absorb(ref, name)

    def closure_resources(call_name: str) -> set[str]:
        return set(resource_usage(corpus.calls[call_name], corpus))

    for name in seeds + mandatory:
        add_call(name)

    while True:
        added = False
        sides = _resource_sides(calls.values(), corpus)
        have = {
            name
            for name, ent in sorted(types.items())
            if ent.kind == "resource"
        }
        for res in sorted(have):
            got = sides.get(res, set())
            for side, lookup in (
                ("producer", corpus.producers_of),
                ("consumer", corpus.consumers_of),
            ):
                if side in got:
                    continue
                candidates = [c for c in lookup(res) if c not in calls]
                if not candidates:
                    raise UnsatisfiableResourceError(
                        f"resource {res!r} has no {side} anywhere in the corpus"
                    )
                current = {n for n, e in types.items() if e.kind == "resource"}
                zero_new = [
                    c for c in candidates if closure_resources(c) <= current
                ]
                pick = min(zero_new) if zero_new else min(candidates)
                add_call(pick)
                added = True
        if not added:
            break

    return FocusedSet(
        calls=calls,
        types=types,
        seed_calls=seeds,
        mandatory_calls=mandatory,
        legacy_inout=corpus.legacy_inout,
    )


class MappingSnapshots:
    """Adapter exposing a plain ``{commit_id: corpus}`` mapping as a provider."""

    def __init__(self, mapping):
        self._mapping = mapping

    def corpus_at(self, commit_id: str) -> DescriptionCorpus:
        return self._mapping[commit_id]


def relevant_description_commits(
    fuzzer_axis,
    snapshots,
    reproducer_calls,
    mandatory_calls=DEFAULT_MANDATORY_CALLS,
):
    """Description axis: fuzzer commits where the bug's descriptions appeared or changed.

    The focused closure is taken at the newest snapshot that resolves the
    reproducer; a commit is relevant when any closure entity's normalized
    declaration first appears or textually differs from the previous
    snapshot. Snapshots are compared oldest to newest so "first appearance"
    is well defined.
    """
    if hasattr(snapshots, "corpus_at"):
        provider = snapshots
    else:
        provider = MappingSnapshots(snapshots)

    seeds = tuple(reproducer_calls)
    closure_names: set[str] | None = None
    for commit in fuzzer_axis:  # newest -> oldest
        corpus = provider.corpus_at(commit.id)
        if all(name in corpus.calls for name in seeds):
            closure_names = focus(corpus, seeds, mandatory_calls).entity_names()
            break
    if closure_names is None:
        raise NeverDescribableError(
            f"reproducer calls {list(seeds)} absent from every description snapshot"
        )

    relevant: list[str] = []
    prev_text: dict[str, str] = {}
    prev_corpus = None
    for commit in reversed(fuzzer_axis.commits):  # oldest -> newest
        corpus = provider.corpus_at(commit.id)
        if corpus is prev_corpus:
            continue
        prev_corpus = corpus
        changed = False
        for name in closure_names:
            ent = corpus.lookup_any(name)
            if ent is None:
                continue
            text = ent.normalized()
            if prev_text.get(name) != text:
                prev_text[name] = text
                changed = True
        if changed:
            relevant.append(commit.id)
    return fuzzer_axis.filtered(relevant)


def load_description_dir(path):
    """Collect ``(path, text)`` sources from a directory of description files."""
    from pathlib import Path

    root = Path(path)
    if root.is_file():
        return [(str(root), root.read_text())]
    sources = []
    for p in sorted(root.rglob("*.txt")):
        sources.append((str(p), p.read_text()))
    if not sources:
        raise SyzlangError(f"no .txt description sources under {root}")
    return sources
