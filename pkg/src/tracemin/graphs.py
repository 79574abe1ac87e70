"""Small adjacency-matrix builders for tests, benchmarks, and demos."""

from __future__ import annotations

import numpy as np

from .laplacian import build_laplacian
from .sparse import SparseMatrix


def _from_edges(n, edges, weights=None):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=np.float64)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    return SparseMatrix.from_coo(n, rows, cols, np.concatenate([w, w]), symmetric=True)


def path_graph(n, weight=1.0):
    edges = [(i, i + 1) for i in range(n - 1)]
    return _from_edges(n, edges, np.full(len(edges), weight))


def cycle_graph(n, weight=1.0):
    edges = [(i, (i + 1) % n) for i in range(n)]
    return _from_edges(n, edges, np.full(len(edges), weight))


def grid_graph(rows, cols, weight=1.0):
    """Adjacency of the rows x cols 2-D lattice."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return _from_edges(rows * cols, edges, np.full(len(edges), weight))


def random_connected_graph(n, extra_edges=None, seed=0, weight_range=(0.5, 2.0)):
    """Random attachment tree plus extra random edges, random positive weights.

    Connected by construction; duplicate edges merge by summing weights.
    """
    rng = np.random.default_rng(seed)
    if extra_edges is None:
        extra_edges = n
    edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    while len(edges) < n - 1 + extra_edges:
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        if a != b:
            edges.append((min(a, b), max(a, b)))
    lo, hi = weight_range
    weights = rng.uniform(lo, hi, len(edges))
    return _from_edges(n, edges, weights)


def tridiagonal_matrix(n, diag=2.0, off=1.0):
    """Symmetric tridiagonal test matrix (a weighted path plus diagonal)."""
    idx = np.arange(n - 1)
    rows = np.concatenate([np.arange(n), idx, idx + 1])
    cols = np.concatenate([np.arange(n), idx + 1, idx])
    vals = np.concatenate([np.full(n, diag), np.full(n - 1, off), np.full(n - 1, off)])
    return SparseMatrix.from_coo(n, rows, cols, vals, symmetric=True)


def laplacian_of(adjacency, weighted=True, keep_diagonal=False):
    """Laplacian pair of a symmetric adjacency matrix (no preprocessing)."""
    return build_laplacian(adjacency, weighted=weighted, keep_diagonal=keep_diagonal)
