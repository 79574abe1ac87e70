"""Pure-numpy fallback for the compiled kernels.

Per-row results are computed from that row's stored entries only, and the
reduction kernels are deterministic functions of the requested row range,
so outputs never depend on how rows were distributed over workers. Within
a row this backend delegates the fold to numpy's segmented reduction
(the compiled backend is the strict left-to-right one); band_mass_range
keeps the strict storage-order fold because its oracle is order-exact.
"""

import numpy as np


def _segment_sums(values, bounds):
    """Sums of values[bounds[i]:bounds[i+1]] for each i, tolerating empty segments."""
    n_seg = len(bounds) - 1
    if values.size == 0:
        return np.zeros(n_seg)
    starts = bounds[:-1]
    sums = np.add.reduceat(values, np.minimum(starts, values.size - 1))
    sums[starts == bounds[1:]] = 0.0
    return sums


def csr_matvec_range(indptr, indices, data, x, out, lo, hi):
    base, end = indptr[lo], indptr[hi]
    prod = data[base:end] * x[indices[base:end]]
    out[lo:hi] = _segment_sums(prod, indptr[lo:hi + 1] - base)


def csr_matmat_range(indptr, indices, data, X, out, lo, hi):
    base, end = indptr[lo], indptr[hi]
    seg = indptr[lo:hi + 1] - base
    idx = indices[base:end]
    vals = data[base:end]
    # Column-by-column through the same path as csr_matvec_range so the two
    # kernels agree bitwise per column.
    for j in range(X.shape[1]):
        out[lo:hi, j] = _segment_sums(vals * X[idx, j], seg)


def gram_range(X, Y, lo, hi):
    return X[lo:hi].T @ Y[lo:hi]


def dot_range(x, y, lo, hi):
    return float(np.dot(x[lo:hi], y[lo:hi]))


def row_abs_sums_range(indptr, data, out, lo, hi):
    base, end = indptr[lo], indptr[hi]
    out[lo:hi] = _segment_sums(np.abs(data[base:end]), indptr[lo:hi + 1] - base)


def band_mass_range(indptr, indices, data, half_width, lo, hi):
    """Return (mass inside |i-j| < half_width, total mass) for rows [lo, hi)."""
    base, end = int(indptr[lo]), int(indptr[hi])
    t = np.abs(data[base:end])
    rows = np.repeat(np.arange(lo, hi), np.diff(indptr[lo:hi + 1]))
    in_band = np.abs(rows - indices[base:end]) < half_width
    band = 0.0
    total = 0.0
    for tk, inb in zip(t.tolist(), in_band.tolist()):
        total += tk
        if inb:
            band += tk
    return band, total
