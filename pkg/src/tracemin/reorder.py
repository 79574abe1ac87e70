"""Spectral reordering from the Fiedler vector and the relative-bandweight metric.

The bandweight of half-width k is the fraction of the total absolute matrix
mass lying strictly inside the band |i - j| < k. Note the strict inequality:
k = 1 measures the diagonal alone. Sorting rows and columns by the Fiedler
vector concentrates mass near the diagonal, which this metric scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix, band_mass


@dataclass(frozen=True)
class Permutation:
    """A bijection on [0, n): ``forward`` maps new index -> old index."""

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward):
        forward = np.asarray(forward, dtype=np.int64)
        n = len(forward)
        inverse = np.full(n, -1, dtype=np.int64)
        inverse[forward] = np.arange(n)
        if np.any(inverse < 0):
            raise ValueError("forward map is not a bijection")
        return cls(forward=forward, inverse=inverse)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(forward=idx, inverse=idx.copy())

    def inverted(self):
        return Permutation(forward=self.inverse.copy(), inverse=self.forward.copy())

    def __len__(self):
        return len(self.forward)


def fiedler_permutation(x):
    """Permutation sorting the entries of x ascending, ties by original index."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < 1:
        raise ValueError("need a nonempty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector entries must be finite")
    return Permutation.from_forward(np.argsort(x, kind="stable"))


def apply_permutation(A, perm):
    """Symmetric reordering: result(i, j) = A(forward[i], forward[j])."""
    if len(perm) != A.n:
        raise ValueError("permutation length does not match the matrix order")
    rows, cols, vals = A.coo()
    return SparseMatrix.from_coo(
        A.n, perm.inverse[rows], perm.inverse[cols], vals, symmetric=A.symmetric
    )


def bandweight(A, half_width, workers=None):
    """Fraction of absolute mass with |i - j| < half_width, in [0, 1]."""
    half_width = int(half_width)
    if half_width < 1:
        raise ValueError("half-width must be at least 1")
    band, total = band_mass(A, half_width, workers=workers)
    if total == 0.0:
        raise ValueError("bandweight of an all-zero matrix is undefined")
    return band / total


@dataclass(frozen=True)
class BandweightProfile:
    half_widths: np.ndarray
    weights: np.ndarray
    total_weight: float


def bandweight_profile(A, half_widths, workers=None):
    """Bandweight at each requested half-width (ascending); nondecreasing in k."""
    ks = np.asarray(half_widths, dtype=np.int64)
    if ks.ndim != 1 or len(ks) == 0:
        raise ValueError("need at least one half-width")
    if np.any(np.diff(ks) <= 0):
        raise ValueError("half-widths must be strictly ascending")
    if ks[0] < 1:
        raise ValueError("half-widths must be at least 1")
    weights = []
    total = None
    for k in ks.tolist():
        band, tot = band_mass(A, k, workers=workers)
        if tot == 0.0:
            raise ValueError("bandweight of an all-zero matrix is undefined")
        weights.append(band / tot)
        total = tot
    return BandweightProfile(half_widths=ks, weights=np.array(weights), total_weight=total)


def default_half_widths(n, count=32):
    """Logarithmically spaced unique integer half-widths in [1, n]."""
    ks = np.unique(np.rint(np.logspace(0.0, np.log10(max(n, 1)), count)).astype(np.int64))
    return ks[(ks >= 1) & (ks <= n)]


def write_permutation(path, perm, matrix_name="", lambda2=None):
    """One 0-based old index per line in new order, with a '#' header."""
    with open(path, "w", encoding="ascii") as fh:
        lam = "unknown" if lambda2 is None else f"{lambda2:.17g}"
        fh.write(f"# matrix: {matrix_name}  lambda2: {lam}\n")
        for idx in perm.forward.tolist():
            fh.write(f"{idx}\n")


def read_permutation(path):
    forward = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            forward.append(int(line))
    return Permutation.from_forward(np.array(forward, dtype=np.int64))


def write_bandweight_csv(target, profile):
    """CSV with header ``k,bandweight``; target is a path or a writable file."""
    lines = ["k,bandweight"]
    lines += [
        f"{int(k)},{w:.17g}"
        for k, w in zip(profile.half_widths.tolist(), profile.weights.tolist())
    ]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="ascii") as fh:
            fh.write(text)
