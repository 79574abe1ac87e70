"""Matrix ingestion, preprocessing, and weighted-Laplacian construction.

The only supported exchange format is Matrix Market coordinate files
(``%%MatrixMarket matrix coordinate real|integer|pattern general|symmetric``,
1-based indices). Ingestion symmetrizes with (|A| + |A^T|)/2, drops isolated
vertices, and builds the Laplacian

    L(i, i) = sum_j |A(i, j)|,   L(i, j) = -|A(i, j)|  (i != j)

together with the perturbed variant L + ||L||_inf * 1e-12 * I whose strictly
positive diagonal preconditions the inner solves before the null vector of L
has converged.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sparse import SparseMatrix, inf_norm

#: Relative size of the diagonal perturbation applied to L.
DIAGONAL_SHIFT = 1e-12


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyGraphError(ValueError):
    """Every vertex of the graph is isolated."""


class DisconnectedGraphError(RuntimeError):
    """The graph has more than one connected component."""

    def __init__(self, components):
        self.components = components
        super().__init__(
            f"graph has {components} connected components; the Fiedler vector is "
            "defined per component (solve components independently)"
        )


@dataclass(frozen=True)
class GraphSource:
    """Preprocessed undirected weighted graph.

    ``matrix`` is the symmetrized absolute-value matrix with isolated
    vertices removed; ``kept_vertices[i]`` is the original index of
    preprocessed vertex i.
    """

    original_n: int
    kept_vertices: np.ndarray
    matrix: SparseMatrix

    @property
    def n(self):
        return self.matrix.n


@dataclass(frozen=True)
class LaplacianPair:
    """A graph Laplacian L, its perturbed variant, and their diagonals."""

    L: SparseMatrix
    L_hat: SparseMatrix
    D: np.ndarray
    D_hat: np.ndarray
    L_inf_norm: float

    @property
    def n(self):
        return self.L.n


def load_matrix_market(path):
    """Parse a coordinate Matrix Market file into a SparseMatrix.

    Duplicate entries are summed, pattern entries get value 1, and
    symmetric-tagged files are expanded to full storage. Parse problems
    raise :class:`MatrixMarketError` carrying the line number.
    """
    path = Path(path)
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", line=1)

    header = lines[0].split()
    if len(header) != 5 or not header[0].lower().startswith("%%matrixmarket"):
        raise MatrixMarketError("missing %%MatrixMarket header", line=1)
    _, obj, fmt, field, symmetry = (t.lower() for t in header)
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported header '{obj} {fmt}'; need coordinate matrix", line=1)
    if field not in ("real", "integer", "pattern"):
        raise MatrixMarketError(f"unsupported field '{field}' (complex input is rejected)", line=1)
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", line=1)
    pattern = field == "pattern"
    mirror = symmetry == "symmetric"

    lineno = 1
    size = None
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        size = text.split()
        break
    if size is None:
        raise MatrixMarketError("missing size line", line=len(lines))
    try:
        n_rows, n_cols, declared = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(f"malformed size line {size!r}", line=lineno) from None
    if n_rows != n_cols:
        raise MatrixMarketError(f"matrix is {n_rows}x{n_cols}, not square", line=lineno)
    if n_rows < 1 or declared < 0:
        raise MatrixMarketError("size line must declare a positive dimension", line=lineno)

    rows, cols, vals = [], [], []
    seen = 0
    for lineno, raw in enumerate(lines[lineno:], start=lineno + 1):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        if seen == declared:
            raise MatrixMarketError("more entries than the size line declared", line=lineno)
        tok = text.split()
        want = 2 if pattern else 3
        if len(tok) != want:
            raise MatrixMarketError(f"expected {want} fields, got {len(tok)}", line=lineno)
        try:
            i = int(tok[0])
            j = int(tok[1])
            v = 1.0 if pattern else float(tok[2])
        except ValueError:
            raise MatrixMarketError(f"malformed entry {text!r}", line=lineno) from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(f"index ({i}, {j}) out of range", line=lineno)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if mirror and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
        seen += 1
    if seen != declared:
        raise MatrixMarketError(
            f"size line declared {declared} entries but file has {seen}", line=len(lines)
        )
    return SparseMatrix.from_coo(n_rows, rows, cols, vals, symmetric=mirror)


def save_matrix_market(path, A, comment=None):
    """Write a SparseMatrix as a coordinate Matrix Market file (1-based)."""
    rows, cols, vals = A.coo()
    if A.symmetric:
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        symmetry = "symmetric"
    else:
        symmetry = "general"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {symmetry}\n")
        if comment:
            for part in str(comment).splitlines():
                fh.write(f"% {part}\n")
        fh.write(f"{A.n} {A.n} {len(vals)}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def symmetrize(A):
    """(|A| + |A^T|) / 2, returned with full symmetric storage."""
    rows, cols, vals = A.coo()
    half = 0.5 * np.abs(vals)
    return SparseMatrix.from_coo(
        A.n,
        np.concatenate([rows, cols]),
        np.concatenate([cols, rows]),
        np.concatenate([half, half]),
        symmetric=True,
    )


def remove_isolated(A):
    """Drop vertices with no off-diagonal entries; error if none remain."""
    if not A.symmetric:
        raise ValueError("remove_isolated expects a symmetric matrix")
    rows, cols, vals = A.coo()
    off = rows != cols
    degree = np.bincount(rows[off], minlength=A.n)
    kept = np.flatnonzero(degree > 0)
    if len(kept) == 0:
        raise EmptyGraphError("all vertices are isolated; the graph is empty")
    renumber = np.full(A.n, -1, dtype=np.int64)
    renumber[kept] = np.arange(len(kept))
    keep_entry = (renumber[rows] >= 0) & (renumber[cols] >= 0)
    matrix = SparseMatrix.from_coo(
        len(kept),
        renumber[rows[keep_entry]],
        renumber[cols[keep_entry]],
        vals[keep_entry],
        symmetric=True,
    )
    return GraphSource(original_n=A.n, kept_vertices=kept, matrix=matrix)


def build_laplacian(G, weighted=True, keep_diagonal=False):
    """Build L and its perturbed companion from a preprocessed graph.

    With ``weighted=False`` every entry weight is replaced by 1 first. By
    default the diagonal of the input matrix is dropped before construction
    so that L keeps exact zero row sums and the constant null vector;
    ``keep_diagonal=True`` folds |A(i, i)| into L's diagonal instead.
    """
    A = G.matrix if isinstance(G, GraphSource) else G
    rows, cols, vals = A.coo()
    w = np.abs(vals) if weighted else np.ones_like(vals)
    off = rows != cols
    included = slice(None) if keep_diagonal else off
    deg = np.bincount(rows[included], weights=w[included], minlength=A.n)
    if np.any(deg == 0.0):
        raise ValueError("graph has isolated vertices; preprocess with remove_isolated")
    L = SparseMatrix.from_coo(
        A.n,
        np.concatenate([rows[off], np.arange(A.n)]),
        np.concatenate([cols[off], np.arange(A.n)]),
        np.concatenate([-w[off], deg]),
        symmetric=True,
    )
    L_inf = inf_norm(L)
    shift = L_inf * DIAGONAL_SHIFT
    hat_values = L.values.copy()
    lrows = np.repeat(np.arange(L.n), np.diff(L.row_offsets))
    hat_values[lrows == L.col_indices] += shift
    L_hat = L.with_values(hat_values)
    D = L.diagonal()
    return LaplacianPair(L=L, L_hat=L_hat, D=D, D_hat=D + shift, L_inf_norm=L_inf)


def connected_components(G):
    """Label vertices by connected component via depth-first traversal."""
    A = G.matrix if isinstance(G, GraphSource) else G
    offs = A.row_offsets
    cols = A.col_indices
    labels = np.full(A.n, -1, dtype=np.int64)
    comp = 0
    for start in range(A.n):
        if labels[start] >= 0:
            continue
        labels[start] = comp
        stack = [start]
        while stack:
            u = stack.pop()
            for k in range(offs[u], offs[u + 1]):
                v = int(cols[k])
                if labels[v] < 0:
                    labels[v] = comp
                    stack.append(v)
        comp += 1
    return labels


def subgraph(G, vertices):
    """Restrict a GraphSource to the given (sorted) preprocessed vertices."""
    vertices = np.asarray(vertices, dtype=np.int64)
    rows, cols, vals = G.matrix.coo()
    renumber = np.full(G.matrix.n, -1, dtype=np.int64)
    renumber[vertices] = np.arange(len(vertices))
    keep = (renumber[rows] >= 0) & (renumber[cols] >= 0)
    matrix = SparseMatrix.from_coo(
        len(vertices), renumber[rows[keep]], renumber[cols[keep]], vals[keep], symmetric=True
    )
    return GraphSource(
        original_n=G.original_n,
        kept_vertices=G.kept_vertices[vertices],
        matrix=matrix,
    )
