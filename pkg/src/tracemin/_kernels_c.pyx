# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR and block-reduction kernels.

Row results are left-to-right folds over the stored entries of each row,
and reduction kernels fold their row range in ascending row order, so a
result depends only on the row range it was asked for, never on how rows
were distributed over workers.
"""

import numpy as np

from libc.math cimport fabs


def csr_matvec_range(const long long[::1] indptr, const long long[::1] indices,
                     const double[::1] data, const double[::1] x,
                     double[::1] out, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t i, k
    cdef double s
    with nogil:
        for i in range(lo, hi):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * x[indices[k]]
            out[i] = s


def csr_matmat_range(const long long[::1] indptr, const long long[::1] indices,
                     const double[::1] data, const double[:, ::1] X,
                     double[:, ::1] out, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t i, j, k, c, m = X.shape[1]
    cdef double v
    with nogil:
        for i in range(lo, hi):
            for j in range(m):
                out[i, j] = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                v = data[k]
                c = indices[k]
                for j in range(m):
                    out[i, j] += v * X[c, j]


def gram_range(const double[:, ::1] X, const double[:, ::1] Y,
               Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t r, i, j, mx = X.shape[1], my = Y.shape[1]
    cdef double xv
    G = np.zeros((mx, my))
    cdef double[:, ::1] g = G
    with nogil:
        for r in range(lo, hi):
            for i in range(mx):
                xv = X[r, i]
                for j in range(my):
                    g[i, j] += xv * Y[r, j]
    return G


def dot_range(const double[::1] x, const double[::1] y,
              Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t i
    cdef double s = 0.0
    with nogil:
        for i in range(lo, hi):
            s += x[i] * y[i]
    return s


def row_abs_sums_range(const long long[::1] indptr, const double[::1] data,
                       double[::1] out, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t i, k
    cdef double s
    with nogil:
        for i in range(lo, hi):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += fabs(data[k])
            out[i] = s


def band_mass_range(const long long[::1] indptr, const long long[::1] indices,
                    const double[::1] data, Py_ssize_t half_width,
                    Py_ssize_t lo, Py_ssize_t hi):
    """Return (mass inside |i-j| < half_width, total mass) for rows [lo, hi)."""
    cdef Py_ssize_t i, k, d
    cdef double t, band = 0.0, total = 0.0
    with nogil:
        for i in range(lo, hi):
            for k in range(indptr[i], indptr[i + 1]):
                t = fabs(data[k])
                total += t
                d = i - indices[k]
                if -half_width < d < half_width:
                    band += t
    return band, total
