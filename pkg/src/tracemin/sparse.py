"""Sparse-matrix and multivector kernels with a block-row parallel contract.

A multivector is an ordinary C-contiguous (n, m) float64 array; columns are
the vectors. All heavy operations here can run data-parallel over the
contiguous row blocks of a :class:`RowPartition`, with two determinism
guarantees:

* row-wise kernels (matvec, matmat) write each owned row from the same
  stored entries in the same order, so any block count produces bitwise
  the result of one block;
* sum reductions (gram, dot, band mass) are folded over fixed-size row
  chunks in ascending chunk order. The chunk grid depends only on n, never
  on the partition, so reductions are also bitwise identical for any
  worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import kernels

#: Rows per reduction chunk. Fixed: the reduction tree must not depend on
#: the worker count, or results would change with it.
REDUCTION_CHUNK = 4096


class SparseMatrix:
    """Square sparse matrix in compressed-row form.

    Column indices are strictly increasing within each row, no explicit
    zeros are stored, and ``symmetric=True`` asserts (and is verified at
    construction to mean) that entry (j, i, v) is stored for every (i, j, v).
    """

    __slots__ = ("n", "row_offsets", "col_indices", "values", "symmetric")

    def __init__(self, n, row_offsets, col_indices, values, symmetric=False):
        self.n = int(n)
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.symmetric = bool(symmetric)
        self._validate()

    def _validate(self):
        if self.n < 1:
            raise ValueError("matrix dimension must be at least 1")
        offs = self.row_offsets
        if offs.shape != (self.n + 1,) or offs[0] != 0 or offs[-1] != len(self.values):
            raise ValueError("malformed row offsets")
        if np.any(np.diff(offs) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if len(self.col_indices) != len(self.values):
            raise ValueError("col_indices and values length mismatch")
        if self.nnz:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n:
                raise ValueError("column index out of range")
            # strictly increasing within each row
            same_row = np.ones(self.nnz - 1, dtype=bool)
            interior = offs[1:-1]
            same_row[interior[(interior > 0) & (interior < self.nnz)] - 1] = False
            if np.any(np.diff(self.col_indices)[same_row] <= 0):
                raise ValueError("column indices must be strictly increasing per row")
            if np.any(self.values == 0.0):
                raise ValueError("explicitly stored zeros are not allowed")
        if self.symmetric:
            t = self.transpose()
            if not (
                np.array_equal(t.row_offsets, self.row_offsets)
                and np.array_equal(t.col_indices, self.col_indices)
                and np.array_equal(t.values, self.values)
            ):
                raise ValueError("matrix flagged symmetric is not symmetric")

    @property
    def nnz(self):
        return len(self.values)

    @classmethod
    def from_coo(cls, n, rows, cols, values, symmetric=False):
        """Build from triplets: duplicates are summed, zeros dropped, rows sorted."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (len(rows) == len(cols) == len(values)):
            raise ValueError("triplet arrays must have equal length")
        if len(rows) and (
            rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n
        ):
            raise ValueError("triplet index out of range")
        if len(rows):
            order = np.lexsort((cols, rows))
            r, c, v = rows[order], cols[order], values[order]
            starts = np.flatnonzero(
                np.concatenate(([True], (r[1:] != r[:-1]) | (c[1:] != c[:-1])))
            )
            r, c = r[starts], c[starts]
            v = np.add.reduceat(v, starts)
            keep = v != 0.0
            r, c, v = r[keep], c[keep], v[keep]
        else:
            r = c = np.empty(0, dtype=np.int64)
            v = np.empty(0, dtype=np.float64)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=n), out=offsets[1:])
        return cls(n, offsets, c, v, symmetric=symmetric)

    @classmethod
    def from_dense(cls, a, symmetric=False):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("dense input must be square")
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], rows, cols, a[rows, cols], symmetric=symmetric)

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        a[rows, self.col_indices] = self.values
        return a

    def transpose(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        return SparseMatrix.from_coo(self.n, self.col_indices, rows, self.values)

    def diagonal(self):
        d = np.zeros(self.n)
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        on_diag = rows == self.col_indices
        d[rows[on_diag]] = self.values[on_diag]
        return d

    def with_values(self, values):
        """Same sparsity pattern, new values (shares the index arrays)."""
        out = SparseMatrix.__new__(SparseMatrix)
        out.n = self.n
        out.row_offsets = self.row_offsets
        out.col_indices = self.col_indices
        out.values = np.ascontiguousarray(values, dtype=np.float64)
        out.symmetric = self.symmetric
        if len(out.values) != self.nnz:
            raise ValueError("value array length mismatch")
        return out

    def coo(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        return rows, self.col_indices.copy(), self.values.copy()

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz}, symmetric={self.symmetric})"


@dataclass(frozen=True)
class RowPartition:
    """Contiguous row blocks covering [0, n); sizes differ by at most one."""

    boundaries: np.ndarray

    @property
    def block_count(self):
        return len(self.boundaries) - 1

    @property
    def n(self):
        return int(self.boundaries[-1])

    def blocks(self):
        b = self.boundaries
        return [(int(b[i]), int(b[i + 1])) for i in range(self.block_count)]


def partition_rows(n, blocks):
    """Split n rows into `blocks` contiguous blocks of near-equal size."""
    if blocks < 1:
        raise ValueError("block count must be at least 1")
    if blocks > n:
        raise ValueError(f"cannot split {n} rows into {blocks} blocks")
    base, rem = divmod(n, blocks)
    sizes = np.full(blocks, base, dtype=np.int64)
    sizes[:rem] += 1
    boundaries = np.zeros(blocks + 1, dtype=np.int64)
    np.cumsum(sizes, out=boundaries[1:])
    return RowPartition(boundaries)


class Workers:
    """Thread team executing kernels over row blocks.

    The worker count never changes results: row-wise kernels write disjoint
    rows and reductions keep a canonical fold order.
    """

    def __init__(self, blocks=1):
        if blocks < 1:
            raise ValueError("worker count must be at least 1")
        self.blocks = int(blocks)
        self._pool = ThreadPoolExecutor(max_workers=blocks) if blocks > 1 else None

    def partition(self, n):
        return partition_rows(n, min(self.blocks, n))

    def run(self, tasks):
        """Run zero-argument callables, returning results in task order."""
        if self._pool is None or len(tasks) == 1:
            return [t() for t in tasks]
        return [f.result() for f in [self._pool.submit(t) for t in tasks]]

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None
            self.blocks = 1

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def multivector(values):
    """Validate and canonicalize an (n, m) block of column vectors."""
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("multivector must be 2-D with at least one column")
    if not np.all(np.isfinite(x)):
        raise ValueError("multivector entries must be finite")
    return x


def _reduction_cuts(n):
    return [(lo, min(lo + REDUCTION_CHUNK, n)) for lo in range(0, n, REDUCTION_CHUNK)]


def _run_blocks(task, n, workers):
    if workers is None or workers.blocks == 1:
        task(0, n)
        return
    workers.run([partial(task, lo, hi) for lo, hi in workers.partition(n).blocks()])


def _run_reduction(task, n, workers):
    cuts = _reduction_cuts(n)
    if workers is None or workers.blocks == 1 or len(cuts) == 1:
        return [task(lo, hi) for lo, hi in cuts]
    return workers.run([partial(task, lo, hi) for lo, hi in cuts])


def spmv(A, x, workers=None):
    """A @ x, each row folded left-to-right over its stored entries."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.n:
        raise ValueError(f"vector length {x.shape} does not match matrix order {A.n}")
    out = np.empty(A.n)
    _run_blocks(
        lambda lo, hi: kernels.csr_matvec_range(
            A.row_offsets, A.col_indices, A.values, x, out, lo, hi
        ),
        A.n,
        workers,
    )
    return out


def spmm(A, X, workers=None):
    """A @ X for a multivector X; column j equals spmv(A, X[:, j])."""
    X = multivector(X)
    if X.shape[0] != A.n:
        raise ValueError(f"multivector rows {X.shape[0]} do not match matrix order {A.n}")
    out = np.empty_like(X)
    _run_blocks(
        lambda lo, hi: kernels.csr_matmat_range(
            A.row_offsets, A.col_indices, A.values, X, out, lo, hi
        ),
        A.n,
        workers,
    )
    return out


def gram(X, Y, workers=None):
    """X.T @ Y via the canonical chunk fold; mirrored to exact symmetry when Y is X."""
    X = multivector(X)
    same = Y is X
    Y = X if same else multivector(Y)
    if X.shape[0] != Y.shape[0]:
        raise ValueError("gram operands must have equal row counts")
    parts = _run_reduction(partial(kernels.gram_range, X, Y), X.shape[0], workers)
    G = parts[0]
    for p in parts[1:]:
        G = G + p
    if same:
        G = np.tril(G) + np.tril(G, -1).T
    return G


def dot(x, y, workers=None):
    """Inner product folded over the canonical row chunks."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("dot operands must be equal-length vectors")
    parts = _run_reduction(partial(kernels.dot_range, x, y), x.shape[0], workers)
    s = parts[0]
    for p in parts[1:]:
        s = s + p
    return float(s)


def inf_norm(A, workers=None):
    """Max over rows of the sum of absolute values of stored entries."""
    sums = np.zeros(A.n)
    _run_blocks(
        lambda lo, hi: kernels.row_abs_sums_range(A.row_offsets, A.values, sums, lo, hi),
        A.n,
        workers,
    )
    return float(sums.max())


def band_mass(A, half_width, workers=None):
    """(mass inside |i-j| < half_width, total mass) over stored entries."""
    parts = _run_reduction(
        partial(kernels.band_mass_range, A.row_offsets, A.col_indices, A.values, half_width),
        A.n,
        workers,
    )
    band = 0.0
    total = 0.0
    for pb, pt in parts:
        band += pb
        total += pt
    return band, total
