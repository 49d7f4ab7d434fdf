"""Matrix Market coordinate-format ingestion and export for Hermitian matrices.

The reader performs full symmetric expansion of triangular storage, validates
Hermitian symmetry (rejecting offenders with the worst entry named), and
reports parse failures with the offending line number.  Pattern-only files
are rejected: values are required.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .core import SparseHermitian

__all__ = ["MatrixMarketError", "read_matrix_market", "write_matrix_market"]

_FIELDS = {"real", "integer", "complex", "pattern"}
_SYMMETRIES = {"general", "symmetric", "hermitian", "skew-symmetric"}


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market content."""


def _fail(line_no: int, message: str):
    raise MatrixMarketError(f"line {line_no}: {message}")


def read_matrix_market(path, tol: float = 1e-12) -> SparseHermitian:
    """Read a coordinate-format Matrix Market file as a SparseHermitian.

    Supports real/integer/complex values with general, symmetric or hermitian
    symmetry.  Triangular storage is mirrored (with conjugation for hermitian
    files); the assembled matrix must be Hermitian within ``tol`` relative.
    """
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file")

    banner = lines[0].split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket":
        _fail(1, f"bad banner {lines[0]!r}")
    obj, fmt, field, symmetry = (tok.lower() for tok in banner[1:])
    if obj != "matrix":
        _fail(1, f"unsupported object {obj!r}")
    if fmt != "coordinate":
        _fail(1, f"unsupported format {fmt!r}: coordinate required")
    if field not in _FIELDS:
        _fail(1, f"unknown field {field!r}")
    if field == "pattern":
        _fail(1, "pattern files carry no values; values are required")
    if symmetry not in _SYMMETRIES:
        _fail(1, f"unknown symmetry {symmetry!r}")
    if symmetry == "skew-symmetric":
        _fail(1, "skew-symmetric matrices are not Hermitian")

    complex_values = field == "complex"
    want = 4 if complex_values else 3

    # size line: first non-comment line after the banner
    pos = 1
    while pos < len(lines) and (lines[pos].startswith("%") or not lines[pos].strip()):
        pos += 1
    if pos >= len(lines):
        raise MatrixMarketError("missing size line")
    size_tokens = lines[pos].split()
    if len(size_tokens) != 3:
        _fail(pos + 1, f"size line must have 3 fields, got {len(size_tokens)}")
    try:
        n_rows, n_cols, n_entries = (int(t) for t in size_tokens)
    except ValueError:
        _fail(pos + 1, f"non-integer size line {lines[pos]!r}")
    if n_rows != n_cols:
        _fail(pos + 1, f"matrix must be square, got {n_rows}x{n_cols}")

    rows = np.empty(n_entries, dtype=np.int64)
    cols = np.empty(n_entries, dtype=np.int64)
    vals = np.empty(n_entries, dtype=np.complex128 if complex_values else np.float64)

    count = 0
    for offset, line in enumerate(lines[pos + 1:], start=pos + 2):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        tokens = stripped.split()
        if len(tokens) != want:
            _fail(offset, f"expected {want} fields, got {len(tokens)}")
        if count >= n_entries:
            _fail(offset, f"more than the declared {n_entries} entries")
        try:
            i = int(tokens[0])
            j = int(tokens[1])
            if complex_values:
                v = complex(float(tokens[2]), float(tokens[3]))
            else:
                v = float(tokens[2])
        except ValueError:
            _fail(offset, f"could not parse entry {stripped!r}")
        if not (1 <= i <= n_rows) or not (1 <= j <= n_cols):
            _fail(offset, f"index ({i}, {j}) outside 1..{n_rows}")
        rows[count] = i - 1
        cols[count] = j - 1
        vals[count] = v
        count += 1
    if count != n_entries:
        raise MatrixMarketError(f"declared {n_entries} entries but found {count}")

    if symmetry in ("symmetric", "hermitian"):
        off = rows != cols
        extra_rows, extra_cols = cols[off], rows[off]
        extra_vals = vals[off].conj() if symmetry == "hermitian" else vals[off]
        rows = np.concatenate([rows, extra_rows])
        cols = np.concatenate([cols, extra_cols])
        vals = np.concatenate([vals, extra_vals])

    coo = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
    return SparseHermitian(coo, symmetrize=True, tol=tol,
                           symmetric_storage=symmetry in ("symmetric", "hermitian"))


def write_matrix_market(path, A: SparseHermitian, comment: str | None = None):
    """Write a SparseHermitian in coordinate format using triangular storage.

    Real matrices are written as `symmetric`, complex ones as `hermitian`;
    only entries with row >= column are stored, values at 17 significant
    digits.
    """
    coo = A.to_scipy().tocoo()
    keep = coo.row >= coo.col
    rows, cols, vals = coo.row[keep], coo.col[keep], coo.data[keep]
    complex_values = A.is_complex
    field = "complex" if complex_values else "real"
    symmetry = "hermitian" if complex_values else "symmetric"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {field} {symmetry}\n")
        if comment:
            for token in comment.splitlines():
                fh.write(f"% {token}\n")
        fh.write(f"{A.n} {A.n} {len(vals)}\n")
        if complex_values:
            for i, j, v in zip(rows, cols, vals):
                fh.write(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}\n")
        else:
            for i, j, v in zip(rows, cols, vals):
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
