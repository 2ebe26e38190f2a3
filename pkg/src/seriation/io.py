"""Text file formats.

Similarity file: header line ``n n_stored``, then exactly n_stored lines
``i j value`` (0-based indices, i <= j, whitespace-separated, decimal
floats).  Permutation file: one 0-based integer per line, giving each
element's position (the positions view).  Counts file: one positive integer
per line.  Assignment file: one line per bin, space-separated sorted
fragment positions.

Writers emit floats with ``repr`` (shortest round-tripping form) and LF line
endings, so outputs are byte-deterministic.
"""

from __future__ import annotations

import numpy as np

from .core import Permutation, SimilarityMatrix
from .duplication import AssignmentMatrix

__all__ = [
    "ParseError",
    "read_similarity",
    "write_similarity",
    "read_permutation",
    "write_permutation",
    "read_counts",
    "write_counts",
    "read_assignment",
    "write_assignment",
]


class ParseError(ValueError):
    """Malformed input file; carries the 1-based offending line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _tokens(path, text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped:
            yield lineno, stripped.split()


def read_similarity(path):
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    it = _tokens(path, text)
    try:
        lineno, head = next(it)
    except StopIteration:
        raise ParseError(path, 1, "empty file; expected 'n n_stored' header") from None
    if len(head) != 2:
        raise ParseError(path, lineno, "header must be 'n n_stored'")
    try:
        n, n_stored = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError(path, lineno, "header fields must be integers") from None
    if n < 1 or n_stored < 0:
        raise ParseError(path, lineno, "header values out of range")
    rows = np.empty(n_stored, dtype=np.int64)
    cols = np.empty(n_stored, dtype=np.int64)
    vals = np.empty(n_stored, dtype=np.float64)
    k = 0
    for lineno, parts in it:
        if k >= n_stored:
            raise ParseError(path, lineno, f"more than {n_stored} triples")
        if len(parts) != 3:
            raise ParseError(path, lineno, "expected 'i j value'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, lineno, "indices must be integers") from None
        try:
            v = float(parts[2])
        except ValueError:
            raise ParseError(path, lineno, "value must be a decimal float") from None
        if not 0 <= i <= j < n:
            raise ParseError(path, lineno, f"need 0 <= i <= j < {n}")
        rows[k], cols[k], vals[k] = i, j, v
        k += 1
    if k != n_stored:
        raise ParseError(path, lineno if k else 1,
                         f"expected {n_stored} triples, found {k}")
    try:
        return SimilarityMatrix(n, rows, cols, vals)
    except ValueError as exc:
        raise ParseError(path, 1, str(exc)) from None


def write_similarity(path, A):
    lines = [f"{A.n} {A.n_stored}"]
    for i, j, v in zip(A.row, A.col, A.val):
        lines.append(f"{i} {j} {float(v)!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_int_lines(path, minimum, what):
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    out = []
    for lineno, parts in _tokens(path, text):
        if len(parts) != 1:
            raise ParseError(path, lineno, f"expected one {what} per line")
        try:
            v = int(parts[0])
        except ValueError:
            raise ParseError(path, lineno, f"{what} must be an integer") from None
        if v < minimum:
            raise ParseError(path, lineno, f"{what} must be >= {minimum}")
        out.append(v)
    if not out:
        raise ParseError(path, 1, "empty file")
    return np.asarray(out, dtype=np.int64)


def read_permutation(path):
    pos = _read_int_lines(path, 0, "position")
    try:
        return Permutation(pos)
    except ValueError as exc:
        raise ParseError(path, 1, str(exc)) from None


def write_permutation(path, perm):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(str(p) for p in perm.positions) + "\n")


def read_counts(path):
    from .duplication import DuplicationCounts

    return DuplicationCounts(_read_int_lines(path, 1, "count"))


def write_counts(path, counts):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(str(c) for c in counts.c) + "\n")


def read_assignment(path):
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    lists = []
    for lineno, parts in _tokens(path, text):
        try:
            lists.append([int(p) for p in parts])
        except ValueError:
            raise ParseError(path, lineno, "positions must be integers") from None
    if not lists:
        raise ParseError(path, 1, "empty file")
    total = sum(len(l) for l in lists)
    bin_of = np.full(total, -1, dtype=np.int64)
    for i, positions in enumerate(lists):
        for p in positions:
            if not 0 <= p < total:
                raise ParseError(path, i + 1, f"position {p} out of range")
            if bin_of[p] != -1:
                raise ParseError(path, i + 1, f"position {p} assigned twice")
            bin_of[p] = i
    try:
        return AssignmentMatrix(bin_of, len(lists))
    except ValueError as exc:
        raise ParseError(path, 1, str(exc)) from None


def write_assignment(path, Z):
    lines = [" ".join(str(p) for p in L) for L in Z.lists()]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
