"""Sparse and dense matrix storage plus MatrixMarket ingestion.

The data matrix is kept in compressed sparse column (CSC) form because the
alternating solver consumes whole columns of V and of V^T.  Factor matrices
are small dense blocks of shape (r, n_items) whose per-latent rows are
contiguous, so that adding a scaled row to a maintained product touches
consecutive memory.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np

__all__ = [
    "SparseMatrix",
    "DenseFactor",
    "ColumnView",
    "MatrixMarketError",
    "DuplicateEntryError",
    "load_matrix_market",
    "save_matrix_market",
    "row_sums",
]


class MatrixMarketError(ValueError):
    """Malformed or out-of-domain MatrixMarket content."""


class DuplicateEntryError(MatrixMarketError):
    """The same (row, column) coordinate appears more than once."""


class ColumnView(NamedTuple):
    """Zero-copy view of one stored column: row indices and values."""

    indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return self.indices.shape[0]


@dataclasses.dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSC matrix with strictly positive stored values.

    Attributes
    ----------
    n_rows, n_cols : int
        Matrix dimensions.
    col_ptr : int64 array, length n_cols + 1
        Offsets into ``row_idx``/``values`` per column.
    row_idx : int64 array, length nnz
        Row index of each stored entry, strictly increasing per column.
    values : float64 array, length nnz
        Stored entries; all strictly positive and finite.
    """

    n_rows: int
    n_cols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "col_ptr", np.ascontiguousarray(self.col_ptr, dtype=np.int64))
        object.__setattr__(self, "row_idx", np.ascontiguousarray(self.row_idx, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        if self.col_ptr.shape[0] != self.n_cols + 1:
            raise ValueError("col_ptr must have length n_cols + 1")
        if self.col_ptr[0] != 0 or self.col_ptr[-1] != self.values.shape[0]:
            raise ValueError("col_ptr must run from 0 to nnz")
        if np.any(np.diff(self.col_ptr) < 0):
            raise ValueError("col_ptr must be nondecreasing")
        if self.row_idx.shape[0] != self.values.shape[0]:
            raise ValueError("row_idx and values must have equal length")
        if self.values.shape[0]:
            if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0.0):
                raise ValueError("stored values must be strictly positive and finite")
            if np.any(self.row_idx < 0) or np.any(self.row_idx >= self.n_rows):
                raise ValueError("row index out of range")
        for j in range(self.n_cols):
            seg = self.row_idx[self.col_ptr[j]:self.col_ptr[j + 1]]
            if seg.shape[0] > 1 and np.any(np.diff(seg) <= 0):
                raise ValueError(f"row indices in column {j} must be strictly increasing")

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triples, dropping explicit zeros.

        Duplicate coordinates raise :class:`DuplicateEntryError`; negative
        values raise :class:`ValueError`.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols, vals must have equal length")
        if vals.shape[0] and (np.any(vals < 0.0) or not np.all(np.isfinite(vals))):
            raise ValueError("entries must be nonnegative and finite")
        keep = vals > 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        if rows.shape[0]:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError("column index out of range")
        order = np.lexsort((rows, cols))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.shape[0] > 1:
            same = (np.diff(cols) == 0) & (np.diff(rows) == 0)
            if np.any(same):
                p = int(np.argmax(same))
                raise DuplicateEntryError(
                    f"duplicate coordinate ({rows[p]}, {cols[p]})"
                )
        col_ptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=n_cols), out=col_ptr[1:])
        return cls(n_rows, n_cols, col_ptr, rows, vals)

    @property
    def nnz(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def sparsity(self) -> float:
        """Fraction of entries that are zero."""
        total = self.n_rows * self.n_cols
        return 1.0 - self.nnz / total if total else 0.0

    def column(self, j: int) -> ColumnView:
        """Zero-copy view of column ``j``."""
        if not 0 <= j < self.n_cols:
            raise IndexError(f"column index {j} out of range for {self.n_cols} columns")
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return ColumnView(self.row_idx[lo:hi], self.values[lo:hi])

    def transpose(self) -> "SparseMatrix":
        """CSC transpose; an involution, bit-exact on values."""
        cols = np.repeat(np.arange(self.n_cols, dtype=np.int64), np.diff(self.col_ptr))
        order = np.argsort(self.row_idx, kind="stable")
        new_rows = cols[order]
        new_vals = self.values[order]
        col_ptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.row_idx, minlength=self.n_rows), out=col_ptr[1:])
        return SparseMatrix(self.n_cols, self.n_rows, col_ptr, new_rows, new_vals)

    def to_dense(self) -> np.ndarray:
        """Densify; only for small matrices in tests and oracles."""
        out = np.zeros((self.n_rows, self.n_cols))
        for j in range(self.n_cols):
            lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
            out[self.row_idx[lo:hi], j] = self.values[lo:hi]
        return out

    def nbytes(self) -> int:
        return self.col_ptr.nbytes + self.row_idx.nbytes + self.values.nbytes


@dataclasses.dataclass
class DenseFactor:
    """Dense nonnegative factor of shape (n_latent, n_items).

    Row ``k`` (one latent component across all items) is contiguous, which is
    what the maintained-product update streams over.  Exact zeros are kept so
    factor sparsity is measurable.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("factor must be 2-dimensional")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0.0):
            raise ValueError("factor entries must be nonnegative and finite")

    @property
    def n_latent(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]

    def row_sums(self) -> np.ndarray:
        """Per-latent-row sums (length n_latent)."""
        return self.values.sum(axis=1)

    def sparsity(self) -> float:
        """Fraction of exactly-zero entries."""
        return float(np.count_nonzero(self.values == 0.0)) / self.values.size

    def copy(self) -> "DenseFactor":
        return DenseFactor(self.values.copy())

    def nbytes(self) -> int:
        return self.values.nbytes


def row_sums(factor: DenseFactor) -> np.ndarray:
    """Sum each latent row of ``factor`` over its items."""
    return factor.row_sums()


_MM_HEADER = "%%MatrixMarket matrix coordinate real general"


def load_matrix_market(path) -> SparseMatrix:
    """Read a coordinate-format MatrixMarket file into a SparseMatrix.

    Accepts ``real`` or ``integer`` fields with ``general`` symmetry.
    Indices are 1-based on disk and 0-based in memory.  Explicit zeros,
    duplicate coordinates and negative values are rejected.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        parts = header.lower().split()
        if (
            len(parts) != 5
            or parts[0] != "%%matrixmarket"
            or parts[1] != "matrix"
            or parts[2] != "coordinate"
            or parts[3] not in ("real", "integer")
            or parts[4] != "general"
        ):
            raise MatrixMarketError(f"unsupported MatrixMarket header: {header!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        try:
            n_rows, n_cols, nnz = (int(tok) for tok in line.split())
        except Exception as exc:
            raise MatrixMarketError(f"malformed size line: {line!r}") from exc
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        k = 0
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            toks = line.split()
            if len(toks) != 3 or k >= nnz:
                raise MatrixMarketError(f"malformed entry line: {line!r}")
            try:
                i, j, v = int(toks[0]), int(toks[1]), float(toks[2])
            except Exception as exc:
                raise MatrixMarketError(f"malformed entry line: {line!r}") from exc
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise MatrixMarketError(f"coordinate ({i}, {j}) out of bounds")
            if v < 0.0:
                raise MatrixMarketError(f"negative entry {v} at ({i}, {j})")
            if v == 0.0:
                raise MatrixMarketError(f"explicit zero at ({i}, {j})")
            rows[k], cols[k], vals[k] = i - 1, j - 1, v
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {k}")
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def save_matrix_market(matrix, path) -> None:
    """Write a SparseMatrix or DenseFactor as coordinate MatrixMarket.

    DenseFactor output lists only nonzero entries (sparse interpretation).
    """
    if isinstance(matrix, DenseFactor):
        rows, cols = np.nonzero(matrix.values)
        vals = matrix.values[rows, cols]
        n_rows, n_cols = matrix.values.shape
    else:
        cols = np.repeat(np.arange(matrix.n_cols, dtype=np.int64), np.diff(matrix.col_ptr))
        rows, vals = matrix.row_idx, matrix.values
        n_rows, n_cols = matrix.n_rows, matrix.n_cols
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_MM_HEADER + "\n")
        fh.write(f"{n_rows} {n_cols} {len(vals)}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def save_tsv(factor: DenseFactor, path) -> None:
    """Write a factor as n_latent tab-separated rows for inspection."""
    np.savetxt(path, factor.values, delimiter="\t", fmt="%.17g")
