"""Bounded-degree set systems: generation, canonical form, discrepancy, text I/O.

A set system is a sparse 0/+-1 incidence matrix where every column carries at
most ``k`` nonzeros.  The coloring walk operates on a *canonical* form: the
matrix is square, every original row is accompanied by its negation (so a
one-sided bound on row sums yields the two-sided one), and every column is
padded with dummy-row entries until its degree is exactly the declared bound.
Padding never touches original rows or columns, so any coloring of the
canonical instance restricts to one of the original system with no worse
discrepancy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class InstanceError(ValueError):
    """Invalid instance data: bad parameters, malformed file, bad coloring."""


@dataclass(frozen=True)
class SetSystem:
    """Sparse 0/+-1 incidence matrix with a declared column-degree bound.

    Entries are stored as parallel arrays sorted by (col, row).  At most one
    entry per (row, col); signs are exactly -1 or +1; every column has at
    most ``k`` entries.
    """

    n_rows: int
    n_cols: int
    k: int
    rows: np.ndarray
    cols: np.ndarray
    signs: np.ndarray

    @staticmethod
    def from_entries(n_rows, n_cols, k, rows, cols, signs) -> "SetSystem":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        signs = np.asarray(signs, dtype=np.int64)
        if not (rows.shape == cols.shape == signs.shape):
            raise InstanceError("entry arrays must have equal length")
        if n_rows < 0 or n_cols < 0 or k < 0:
            raise InstanceError("negative dimension or degree bound")
        if rows.size:
            if rows.min(initial=0) < 0 or rows.max(initial=-1) >= n_rows:
                raise InstanceError("row index out of range")
            if cols.min(initial=0) < 0 or cols.max(initial=-1) >= n_cols:
                raise InstanceError("col index out of range")
            if not np.isin(signs, (-1, 1)).all():
                raise InstanceError("entry signs must be -1 or +1")
        order = np.lexsort((rows, cols))
        rows, cols, signs = rows[order], cols[order], signs[order]
        if rows.size > 1:
            dup = (np.diff(cols) == 0) & (np.diff(rows) == 0)
            if dup.any():
                j = int(np.flatnonzero(dup)[0])
                raise InstanceError(
                    f"duplicate entry at row {rows[j]}, col {cols[j]}"
                )
        degrees = np.bincount(cols, minlength=n_cols)
        if degrees.size and degrees.max(initial=0) > k:
            j = int(np.argmax(degrees))
            raise InstanceError(
                f"column {j} has degree {degrees[j]} > declared bound k={k}"
            )
        return SetSystem(n_rows, n_cols, k, rows, cols, signs)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.signs.astype(np.float64), (self.rows, self.cols)),
            shape=(self.n_rows, self.n_cols),
        )

    @cached_property
    def col_degrees(self) -> np.ndarray:
        return np.bincount(self.cols, minlength=self.n_cols)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SetSystem):
            return NotImplemented
        return (
            (self.n_rows, self.n_cols, self.k) == (other.n_rows, other.n_cols, other.k)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.signs, other.signs)
        )


# Provenance tags for canonical rows/columns.
ROW_ORIGINAL = "original"
ROW_NEGATED = "negated"
ROW_DUMMY = "dummy"
COL_ORIGINAL = "original"
COL_PADDING = "padding"


@dataclass(frozen=True)
class CanonicalInstance:
    """Square system with exact column degree k and negation-closed original rows."""

    system: SetSystem
    origin_rows: int
    origin_cols: int
    row_provenance: tuple
    col_provenance: tuple

    @property
    def n(self) -> int:
        return self.system.n_rows

    @property
    def k(self) -> int:
        return self.system.k


def gen_random_regular(n_rows: int, n_cols: int, k: int, seed: int,
                       signed: bool = False) -> SetSystem:
    """Random system where every column has exactly k entries in distinct rows.

    Signs are all +1 by default (the canonical form appends negations, which
    exercises the two-sided bound); ``signed=True`` draws signs uniformly.
    Deterministic given the seed.
    """
    if k > n_rows:
        raise InstanceError(f"k={k} exceeds n_rows={n_rows}")
    rng = np.random.default_rng(seed)
    rows = np.empty(n_cols * k, dtype=np.int64)
    for j in range(n_cols):
        rows[j * k:(j + 1) * k] = rng.choice(n_rows, size=k, replace=False)
    cols = np.repeat(np.arange(n_cols, dtype=np.int64), k)
    if signed:
        signs = rng.integers(0, 2, size=n_cols * k) * 2 - 1
    else:
        signs = np.ones(n_cols * k, dtype=np.int64)
    return SetSystem.from_entries(n_rows, n_cols, k, rows, cols, signs)


def _canonical_labels(sys: SetSystem):
    """Provenance labels if the system is already in normal form, else None.

    Normal form: square, every column at exact degree k, and every row either
    negation-paired (these are the signed constraint rows) or all-positive
    (these are dummy padding rows).  At least one pair must exist, so a plain
    unsigned system is never mistaken for an already-canonicalized one.
    """
    if sys.n_rows != sys.n_cols or sys.nnz != sys.k * sys.n_cols:
        return None
    if sys.n_cols and (sys.col_degrees != sys.k).any():
        return None
    mat = sys.matrix
    keys = []
    buckets: dict = {}
    for i in range(sys.n_rows):
        lo, hi = mat.indptr[i], mat.indptr[i + 1]
        key = (mat.indices[lo:hi].tobytes(), mat.data[lo:hi].tobytes())
        keys.append(key)
        buckets.setdefault(key, []).append(i)
    paired = np.zeros(sys.n_rows, dtype=bool)
    for i in range(sys.n_rows):
        if paired[i]:
            continue
        lo, hi = mat.indptr[i], mat.indptr[i + 1]
        if lo == hi:  # empty row is its own negation
            paired[i] = True
            continue
        neg_key = (mat.indices[lo:hi].tobytes(), (-mat.data[lo:hi]).tobytes())
        partners = [j for j in buckets.get(neg_key, ()) if not paired[j] and j != i]
        if partners:
            paired[i] = paired[partners[0]] = True
    unpaired = np.flatnonzero(~paired)
    if unpaired.size == sys.n_rows and sys.n_rows > 0:
        return None
    for i in unpaired:
        lo, hi = mat.indptr[i], mat.indptr[i + 1]
        if (mat.data[lo:hi] < 0).any():
            return None
    rp = []
    dummy_count = 0
    for i in range(sys.n_rows):
        if paired[i]:
            rp.append((ROW_ORIGINAL, i))
        else:
            rp.append((ROW_DUMMY, dummy_count))
            dummy_count += 1
    cp = tuple((COL_ORIGINAL, j) for j in range(sys.n_cols))
    return tuple(rp), cp


def canonicalize(sys: SetSystem) -> CanonicalInstance:
    """Normal form: square, negation-closed, every column degree exactly 2k.

    Procedure: append -a_i for every row, re-declare the bound as K = 2k
    (doubling), then pad light columns with +1 entries in fresh dummy rows and
    square up with padding columns (which carry only dummy-row entries).
    Idempotent on instances already in normal form.
    """
    labels = _canonical_labels(sys)
    if labels is not None:
        rp, cp = labels
        return CanonicalInstance(sys, sys.n_rows, sys.n_cols, rp, cp)

    m, n = sys.n_rows, sys.n_cols
    big_k = 2 * sys.k
    rows = [sys.rows, sys.rows + m]
    cols = [sys.cols, sys.cols]
    signs = [sys.signs, -sys.signs]
    deficits = big_k - 2 * sys.col_degrees  # >= 0 per declared bound
    need_fill = int(deficits.sum()) > 0

    # Row/column counts: 2m + n_dummy = n + n_pad, with enough dummy rows that
    # every padded column finds distinct ones.
    # Padding columns carry exactly big_k dummy entries each; keeping one
    # spare dummy row staggers their supports so no two dummy rows coincide.
    m2 = 2 * m
    max_deficit = int(deficits.max(initial=0))
    if m2 <= n:
        n_pad = 0
        n_dummy = n - m2
        min_dummy = max(max_deficit, 1 if need_fill else 0)
        if n_dummy < min_dummy:
            n_pad = max(min_dummy, big_k + 1) - n_dummy
            n_dummy += n_pad
    else:
        n_dummy = max(max_deficit, big_k + 1) if (need_fill or big_k > 0) else 0
        n_pad = m2 - n + n_dummy

    # Distribute padding entries round-robin over the dummy rows, columns in
    # ascending index; consecutive slots guarantee distinct rows per column.
    pad_rows, pad_cols = [], []
    cursor = 0
    all_deficits = list(deficits) + [big_k] * n_pad
    for j, need in enumerate(all_deficits):
        for step in range(int(need)):
            pad_rows.append(m2 + (cursor + step) % n_dummy)
            pad_cols.append(j)
        cursor += int(need)
    if pad_rows:
        rows.append(np.array(pad_rows, dtype=np.int64))
        cols.append(np.array(pad_cols, dtype=np.int64))
        signs.append(np.ones(len(pad_rows), dtype=np.int64))

    out = SetSystem.from_entries(
        m2 + n_dummy, n + n_pad, big_k,
        np.concatenate(rows), np.concatenate(cols), np.concatenate(signs),
    )
    if out.n_rows != out.n_cols:
        raise AssertionError("canonicalize produced a non-square system")
    if out.n_cols and (out.col_degrees != big_k).any():
        raise AssertionError("canonicalize left a column below exact degree")
    rp = (
        tuple((ROW_ORIGINAL, i) for i in range(m))
        + tuple((ROW_NEGATED, i) for i in range(m))
        + tuple((ROW_DUMMY, d) for d in range(n_dummy))
    )
    cp = tuple((COL_ORIGINAL, j) for j in range(n)) + tuple(
        (COL_PADDING, p) for p in range(n_pad)
    )
    return CanonicalInstance(out, m, n, rp, cp)


def discrepancy(sys: SetSystem, x: np.ndarray) -> float:
    """max_i |<a_i, x>|; an integer for full +-1 colorings."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (sys.n_cols,):
        raise InstanceError(
            f"coloring length {x.shape} does not match n_cols={sys.n_cols}"
        )
    if sys.n_rows == 0:
        return 0.0
    return float(np.abs(sys.matrix @ x).max())


BRUTE_FORCE_COL_LIMIT = 24


def brute_force_min_disc(sys: SetSystem) -> int:
    """Exact minimum discrepancy by enumeration; guarded at 24 columns."""
    n = sys.n_cols
    if n > BRUTE_FORCE_COL_LIMIT:
        raise InstanceError(
            f"brute force limited to {BRUTE_FORCE_COL_LIMIT} columns, got {n}"
        )
    if n == 0 or sys.n_rows == 0:
        return 0
    at = sys.dense().T  # (n, m)
    best = np.inf
    # disc(x) = disc(-x): fix the top coordinate to +1.
    total = 1 << (n - 1)
    chunk = 1 << 14
    shifts = np.arange(n, dtype=np.uint32)
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        bits = ((ids[:, None] >> shifts) & 1).astype(np.float64) * 2.0 - 1.0
        bits[:, n - 1] = 1.0
        disc = np.abs(bits @ at).max(axis=1)
        best = min(best, float(disc.min()))
    return int(round(best))


FORMAT_MAGIC = "discinstance"
FORMAT_VERSION = 1


def write_instance(sys: SetSystem) -> str:
    """Serialize to the line-oriented text format, entries sorted by (col, row)."""
    lines = [
        f"{FORMAT_MAGIC} {FORMAT_VERSION}",
        f"rows {sys.n_rows}",
        f"cols {sys.n_cols}",
        f"k {sys.k}",
        f"nnz {sys.nnz}",
    ]
    for r, c, v in zip(sys.rows, sys.cols, sys.signs):
        lines.append(f"{r} {c} {v}")
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> SetSystem:
    """Parse the text format; every defect is reported with its line number."""

    def fail(lineno, msg):
        raise InstanceError(f"line {lineno}: {msg}")

    content = []  # (lineno, tokens)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            content.append((lineno, line.split()))

    if not content:
        raise InstanceError("line 1: empty instance file")
    lineno, tok = content[0]
    if len(tok) != 2 or tok[0] != FORMAT_MAGIC:
        fail(lineno, f"expected '{FORMAT_MAGIC} {FORMAT_VERSION}' header")
    if tok[1] != str(FORMAT_VERSION):
        fail(lineno, f"unsupported format version {tok[1]}")

    header = {}
    for key in ("rows", "cols", "k", "nnz"):
        idx = 1 + len(header)
        if idx >= len(content):
            raise InstanceError(f"line {lineno}: missing '{key}' header line")
        lineno, tok = content[idx]
        if len(tok) != 2 or tok[0] != key:
            fail(lineno, f"expected '{key} <count>'")
        try:
            header[key] = int(tok[1])
        except ValueError:
            fail(lineno, f"'{key}' is not an integer: {tok[1]}")
        if header[key] < 0:
            fail(lineno, f"'{key}' must be nonnegative")

    entries = content[5:]
    if len(entries) != header["nnz"]:
        where = entries[-1][0] if entries else lineno
        raise InstanceError(
            f"line {where}: expected {header['nnz']} entries, found {len(entries)}"
        )
    rows = np.empty(len(entries), dtype=np.int64)
    cols = np.empty(len(entries), dtype=np.int64)
    signs = np.empty(len(entries), dtype=np.int64)
    seen = set()
    for pos, (lineno, tok) in enumerate(entries):
        if len(tok) != 3:
            fail(lineno, f"expected '<row> <col> <sign>', got {' '.join(tok)}")
        try:
            i, j, v = int(tok[0]), int(tok[1]), int(tok[2])
        except ValueError:
            fail(lineno, f"non-integer entry: {' '.join(tok)}")
        if not 0 <= i < header["rows"]:
            fail(lineno, f"row index {i} out of range [0, {header['rows']})")
        if not 0 <= j < header["cols"]:
            fail(lineno, f"col index {j} out of range [0, {header['cols']})")
        if v not in (-1, 1):
            fail(lineno, f"sign must be -1 or 1, got {v}")
        if (i, j) in seen:
            fail(lineno, f"duplicate entry at row {i}, col {j}")
        seen.add((i, j))
        rows[pos], cols[pos], signs[pos] = i, j, v
    return SetSystem.from_entries(
        header["rows"], header["cols"], header["k"], rows, cols, signs
    )
