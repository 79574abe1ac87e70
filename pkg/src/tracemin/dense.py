"""Dense kernels on narrow column blocks and small symmetric matrices.

Everything here operates on blocks that are at most a handful of columns
wide, so robustness beats asymptotics: orthonormalization is modified
Gram-Schmidt with a second pass, the eigensolver is cyclic Jacobi (which
keeps eigenvectors orthogonal even for repeated eigenvalues), and linear
systems go through an LDL^T factorization with symmetric diagonal pivoting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sparse import dot, multivector

#: A column whose post-projection norm falls below this fraction of
#: (original norm + 1) is declared linearly dependent and replaced.
DEPENDENT_TOL = 1e-10

_JACOBI_SWEEP_CAP = 60


class SingularSystemError(RuntimeError):
    """Factorization hit a negligible pivot; carries its magnitude."""

    def __init__(self, pivot):
        self.pivot = float(pivot)
        super().__init__(f"numerically singular system (pivot magnitude {self.pivot:.3e})")


@dataclass(frozen=True)
class SmallEigen:
    """Eigenvalues in ascending order and the matching orthogonal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def orthonormalize(X, rng=None, workers=None):
    """Orthonormalize the columns of X by modified Gram-Schmidt, twice.

    Columns that lose essentially all their norm to the projection are
    replaced by fresh random vectors (drawn from ``rng``) and orthogonalized
    again, so the result always has full column rank and V^T V = I to
    roughly machine precision.
    """
    X = multivector(X)
    n, m = X.shape
    if n < m:
        raise ValueError(f"cannot orthonormalize {m} columns of length {n}")
    if rng is None:
        rng = np.random.default_rng(0)
    cols = []
    for j in range(m):
        v = X[:, j].copy()
        original = math.sqrt(dot(v, v, workers))
        for _ in range(2):
            for u in cols:
                v -= dot(u, v, workers) * u
        norm = math.sqrt(dot(v, v, workers))
        attempts = 0
        while norm < DEPENDENT_TOL * (original + 1.0):
            if attempts >= 5:
                raise RuntimeError("could not replace a dependent column")
            attempts += 1
            v = rng.uniform(-1.0, 1.0, n)
            for _ in range(2):
                for u in cols:
                    v -= dot(u, v, workers) * u
            norm = math.sqrt(dot(v, v, workers))
        cols.append(v / norm)
    return np.stack(cols, axis=1)


def sym_eig(H):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Returns ascending eigenvalues and an orthogonal eigenvector matrix; each
    eigenvector is signed so its largest-magnitude entry is positive.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("sym_eig expects a square matrix")
    if not np.array_equal(H, H.T):
        raise ValueError("sym_eig expects an exactly symmetric matrix")
    m = H.shape[0]
    a = H.copy()
    vectors = np.eye(m)
    if m > 1:
        scale = 1.0 + float(np.abs(H).max())
        for _sweep in range(_JACOBI_SWEEP_CAP):
            off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
            if off <= 1e-15 * scale:
                break
            for p in range(m - 1):
                for q in range(p + 1, m):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = 0.5 * (a[q, q] - a[p, p]) / apq
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                    c = 1.0 / math.hypot(1.0, t)
                    s = t * c
                    _rotate_pair(a, vectors, p, q, c, s)
        else:
            raise RuntimeError("Jacobi eigensolver did not converge")
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    for j in range(m):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0.0:
            vectors[:, j] = -vectors[:, j]
    return SmallEigen(eigenvalues=eigenvalues, eigenvectors=vectors)


def _rotate_pair(a, vectors, p, q, c, s):
    # two-sided rotation on a, one-sided on the accumulated eigenvectors
    ap, aq = a[:, p].copy(), a[:, q].copy()
    a[:, p] = c * ap - s * aq
    a[:, q] = s * ap + c * aq
    ap, aq = a[p, :].copy(), a[q, :].copy()
    a[p, :] = c * ap - s * aq
    a[q, :] = s * ap + c * aq
    a[p, q] = a[q, p] = 0.0
    vp, vq = vectors[:, p].copy(), vectors[:, q].copy()
    vectors[:, p] = c * vp - s * vq
    vectors[:, q] = s * vp + c * vq


def small_solve(S, B):
    """Solve S N = B via LDL^T with symmetric diagonal pivoting.

    Raises :class:`SingularSystemError` (carrying the pivot magnitude) when
    the factorization breaks down.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("small_solve expects a square matrix")
    m = S.shape[0]
    B = np.asarray(B, dtype=np.float64)
    single = B.ndim == 1
    rhs = B.reshape(m, -1) if single else B
    if rhs.shape[0] != m:
        raise ValueError("right-hand side does not conform to the system")

    a = S.copy()
    index = np.arange(m)
    tiny = 1e-13 * (1.0 + float(np.abs(S).max()))
    for k in range(m):
        j = k + int(np.argmax(np.abs(np.diag(a)[k:])))
        if j != k:
            a[[k, j], :] = a[[j, k], :]
            a[:, [k, j]] = a[:, [j, k]]
            index[[k, j]] = index[[j, k]]
        pivot = a[k, k]
        if abs(pivot) <= tiny:
            raise SingularSystemError(abs(pivot))
        if k + 1 < m:
            col = a[k + 1 :, k] / pivot
            a[k + 1 :, k + 1 :] -= np.outer(col, a[k + 1 :, k])
            a[k + 1 :, k] = col

    d = np.diag(a).copy()
    y = rhs[index, :].copy()
    for i in range(1, m):  # forward: L z = P^T b
        y[i, :] -= a[i, :i] @ y[:i, :]
    y /= d[:, None]
    for i in range(m - 2, -1, -1):  # backward: L^T w = z
        y[i, :] -= a[i + 1 :, i] @ y[i + 1 :, :]
    out = np.empty_like(y)
    out[index, :] = y
    return out[:, 0] if single else out
