"""Document I/O: versioned JSON documents, key-value config files, the session cache log.

Every structured file the tool reads or writes goes through this module so
that schema versioning and byte-stable serialization live in one place.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

SCHEMA_PREFIX = "retrofuzz"
SCHEMA_VERSION = 1


class DocumentError(Exception):
    """Unreadable, malformed, or wrong-schema input document."""


class CacheVersionError(DocumentError):
    """Cache log written by an incompatible schema version."""


def schema_tag(kind: str) -> str:
    return f"{SCHEMA_PREFIX}/{kind}@{SCHEMA_VERSION}"


def canonical_json(obj) -> str:
    """Stable text form: sorted keys, two-space indent, trailing newline.

    Identical inputs must produce identical bytes; world files and reports
    are compared byte-for-byte in the determinism checks.
    """
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_document(path, kind: str, body: dict) -> None:
    doc = dict(body)
    doc["schema"] = schema_tag(kind)
    Path(path).write_text(canonical_json(doc))


def read_document(path, kind: str) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise DocumentError(f"{path}: unreadable: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{path}: expected a JSON object")
    tag = doc.get("schema")
    if tag != schema_tag(kind):
        raise DocumentError(f"{path}: schema {tag!r}, expected {schema_tag(kind)!r}")
    return doc


def parse_kv(text: str, source: str = "<kv>") -> dict:
    """Parse a flat ``key = value`` document into a nested dict.

    Dotted keys nest (``factor_mix.kernel_commit = 0.21``). Values are parsed
    as JSON where possible (numbers, booleans, quoted strings, lists) and
    kept as bare strings otherwise. ``#`` starts a comment. Later duplicate
    keys overwrite earlier ones.
    """
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DocumentError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise DocumentError(f"{source}:{lineno}: empty key")
        try:
            parsed = json.loads(value.strip())
        except json.JSONDecodeError:
            parsed = value.strip()
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise DocumentError(f"{source}:{lineno}: key {key!r} collides with a scalar")
        node[parts[-1]] = parsed
    return out


def load_kv(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DocumentError(f"{path}: unreadable: {exc}") from exc
    return parse_kv(text, source=str(path))


class CacheLog:
    """Append-only session/budget cache backed by a JSON-lines file.

    First line is a header record carrying the schema tag; every later line
    is either a session outcome keyed by (bug, target, fuzzer, focused-set
    hash) or a per-bug calibrated budget. Appends are serialized so a
    campaign worker pool can share one log. ``clear`` compacts the file back
    to a bare header.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.sessions: dict[str, dict] = {}
        self.budgets: dict[str, dict] = {}
        if self.path.exists():
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._write_header()

    def _write_header(self) -> None:
        with self.path.open("w") as fh:
            fh.write(json.dumps({"schema": schema_tag("cache")}) + "\n")

    def _load(self) -> None:
        with self.path.open() as fh:
            first = fh.readline()
            if not first.strip():
                self._write_header()
                return
            try:
                header = json.loads(first)
            except json.JSONDecodeError as exc:
                raise CacheVersionError(f"{self.path}: corrupt header: {exc}") from exc
            if header.get("schema") != schema_tag("cache"):
                raise CacheVersionError(
                    f"{self.path}: cache schema {header.get('schema')!r} does not match "
                    f"{schema_tag('cache')!r}; clear the cache or point at a fresh path"
                )
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DocumentError(f"{self.path}:{lineno}: corrupt record: {exc}") from exc
                if rec.get("t") == "session":
                    self.sessions[rec["k"]] = rec["o"]
                elif rec.get("t") == "budget":
                    self.budgets[rec["bug"]] = rec["b"]

    def _append(self, rec: dict) -> None:
        with self._lock:
            with self.path.open("a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def put_session(self, key: str, outcome: dict) -> None:
        with self._lock:
            self.sessions[key] = outcome
        self._append({"t": "session", "k": key, "o": outcome})

    def get_session(self, key: str) -> dict | None:
        return self.sessions.get(key)

    def put_budget(self, bug_id: str, budget: dict) -> None:
        with self._lock:
            self.budgets[bug_id] = budget
        self._append({"t": "budget", "bug": bug_id, "b": budget})

    def get_budget(self, bug_id: str) -> dict | None:
        return self.budgets.get(bug_id)

    def clear(self) -> None:
        with self._lock:
            self.sessions.clear()
            self.budgets.clear()
            self._write_header()

    def stats(self) -> dict:
        return {
            "path": str(self.path),
            "sessions": len(self.sessions),
            "budgets": len(self.budgets),
        }


class MemoryCache:
    """In-process stand-in for :class:`CacheLog` when no path is configured."""

    def __init__(self):
        self._lock = threading.Lock()
        self.sessions: dict[str, dict] = {}
        self.budgets: dict[str, dict] = {}

    def put_session(self, key, outcome):
        with self._lock:
            self.sessions[key] = outcome

    def get_session(self, key):
        return self.sessions.get(key)

    def put_budget(self, bug_id, budget):
        with self._lock:
            self.budgets[bug_id] = budget

    def get_budget(self, bug_id):
        return self.budgets.get(bug_id)

    def clear(self):
        with self._lock:
            self.sessions.clear()
            self.budgets.clear()

    def stats(self):
        return {"path": None, "sessions": len(self.sessions), "budgets": len(self.budgets)}
