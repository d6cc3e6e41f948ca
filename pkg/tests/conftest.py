from __future__ import annotations

import datetime as dt

import pytest

from retrofuzz.history import Commit, CommitAxis
from retrofuzz.syzlang import parse_descriptions

FIG5_TEXT = """\
resource my_resource[intptr]

producer(num int32) my_resource
consumer(p ptr[inout, parent])

parent {
\tpad\tint32
\tchild\tchild\t(in)
}

child {
\ttag\tint16
\trec\tmy_resource
}
"""

MANDATORY_STUB_TEXT = """\
mmap(addr intptr, len intptr, prot int32, flags int32, fd int32, off intptr)
syz_execute_func(text ptr[in, exec_blob])
exec_blob {
\tcode\tarray[int8, 64]
}
"""


@pytest.fixture
def fig5_corpus():
    return parse_descriptions([("fig5.txt", FIG5_TEXT)])


@pytest.fixture
def fig5_legacy_corpus():
    return parse_descriptions([("fig5.txt", FIG5_TEXT)], legacy_inout=True)


@pytest.fixture
def fig5_with_mandatory():
    return parse_descriptions(
        [("fig5.txt", FIG5_TEXT), ("stubs.txt", MANDATORY_STUB_TEXT)]
    )


def make_axis(kind: str, days: list[tuple[str, str, int]]) -> CommitAxis:
    """Axis helper: rows of (id, iso-date, day_index), any order."""
    commits = [
        Commit(cid, dt.date.fromisoformat(day), idx) for cid, day, idx in days
    ]
    commits.sort(key=lambda c: c.sort_key, reverse=True)
    return CommitAxis(kind, commits)
