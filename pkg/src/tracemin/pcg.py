"""Diagonally preconditioned conjugate gradient inner solver.

The recurrence applies the preconditioner as z = M^-1 r, which for a
diagonal M is algebraically identical to running plain CG on the
symmetrically scaled system M^-1/2 A M^-1/2 but cheaper. The stopping rule
is still evaluated in the scaled metric: ||M^-1/2 r||_inf relative to
||M^-1/2 b||_inf, with the recursively updated residual; the true residual
is recomputed once at exit for the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sparse import dot, multivector, spmv


@dataclass(frozen=True)
class PcgConfig:
    eps_in: float = 1e-6
    max_iters: int = 30

    def __post_init__(self):
        if self.eps_in <= 0.0:
            raise ValueError("inner tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("iteration cap must be at least 1")


@dataclass
class PcgReport:
    iterations: int
    achieved_relres: float
    converged: bool
    min_curvature: float
    breakdown: bool = False


def pcg_solve(A, M_diag, b, cfg=None, workers=None, callback=None, singular=False):
    """Solve A x = b from x0 = 0 with Jacobi-preconditioned CG.

    Nonpositive curvature (p^T A p <= 0, possible only when the claimed
    semidefiniteness is violated) terminates the solve and flags the report
    rather than raising: the outer iteration tolerates an inexact solution.

    ``singular=True`` declares A positive semidefinite with a deflated
    right-hand side. Such a system is consistent only up to the deflation
    accuracy, the scaled residual floors there, and iterating past the
    floor drifts along the null space until the curvature turns numerically
    nonpositive; the breakdown then hands back the last iterate that
    meaningfully improved the residual instead of the drifted one. Without
    the flag the current iterate is kept on breakdown, and cap exits always
    keep the last iterate: on the perturbed (definite) systems the residual
    legitimately spikes while the near-null mode is being amplified, and
    intermediate iterates must not win.

    ``callback(k, x, r, p, curvature)`` is invoked at the top of iteration k
    with views of the pre-update iterate, residual, and search direction.
    """
    if cfg is None:
        cfg = PcgConfig()
    if not A.symmetric:
        raise ValueError("pcg_solve expects a symmetric matrix")
    M = np.ascontiguousarray(M_diag, dtype=np.float64)
    if M.shape != (A.n,) or np.any(M <= 0.0):
        raise ValueError("preconditioner diagonal must be strictly positive")
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.shape != (A.n,):
        raise ValueError("right-hand side length does not match the matrix")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side must be finite")

    inv_m = 1.0 / M
    inv_sqrt_m = 1.0 / np.sqrt(M)

    def scaled_inf(res):
        return float(np.max(np.abs(res) * inv_sqrt_m))

    x = np.zeros(A.n)
    denom = scaled_inf(b)
    if denom == 0.0:
        return x, PcgReport(0, 0.0, True, math.inf)

    r = b.copy()
    z = r * inv_m
    p = z.copy()
    rz = dot(r, z, workers)
    min_curvature = math.inf
    converged = False
    breakdown = False
    iterations = 0
    # Singular-mode bookkeeping: the last iterate that improved the scaled
    # residual by a meaningful margin. Ulp-level wiggles at the residual
    # floor must not promote an iterate that has drifted along the null
    # space, which the residual cannot see.
    best_relres = 1.0
    best_x = x.copy()
    for k in range(1, cfg.max_iters + 1):
        q = spmv(A, p, workers)
        curvature = dot(p, q, workers)
        min_curvature = min(min_curvature, curvature)
        if callback is not None:
            callback(k, x, r, p, curvature)
        if curvature <= 0.0:
            breakdown = True
            x = best_x if singular else x
            break
        alpha = rz / curvature
        x += alpha * p
        r -= alpha * q
        iterations = k
        relres = scaled_inf(r) / denom
        if relres < best_relres * (1.0 - 1e-3):
            best_relres = relres
            best_x = x.copy()
        if relres <= cfg.eps_in:
            converged = True
            break
        z = r * inv_m
        rz_next = dot(r, z, workers)
        beta = rz_next / rz
        rz = rz_next
        p = z + beta * p

    true_res = b - spmv(A, x, workers)
    report = PcgReport(
        iterations=iterations,
        achieved_relres=scaled_inf(true_res) / denom,
        converged=converged,
        min_curvature=min_curvature,
        breakdown=breakdown,
    )
    return x, report


def pcg_solve_block(A, M_diag, B, cfg=None, workers=None, singular=False):
    """Solve A W = B column by column; columns are independent solves."""
    B = multivector(B)
    W = np.empty_like(B)
    reports = []
    for j in range(B.shape[1]):
        x, report = pcg_solve(
            A, M_diag, np.ascontiguousarray(B[:, j]), cfg, workers, singular=singular
        )
        W[:, j] = x
        reports.append(report)
    return W, reports
