"""Outer trace-minimization iteration for the smallest Laplacian eigenpairs.

Each outer step orthonormalizes the working block, projects the Laplacian
onto it, diagonalizes the small projected matrix to form a Ritz section,
tests residuals, moves converged columns into the deflation set, projects
the deflation set out of the block, solves the (perturbed) Laplacian
against the block with preconditioned CG, and recombines the approximate
inverse image through the small Schur-complement system. The perturbed
matrix and its diagonal are used only until the null vector has converged;
afterwards the exact singular Laplacian is safe because deflated right-hand
sides keep the CG directions out of its null space.

Converged columns leave the working block without replacement, so the block
narrows as eigenpairs converge and the section trace stays monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dense import SingularSystemError, orthonormalize, small_solve, sym_eig
from .laplacian import DisconnectedGraphError
from .pcg import PcgConfig, pcg_solve, pcg_solve_block
from .sparse import dot, gram, multivector, spmm, spmv


@dataclass(frozen=True)
class SolverConfig:
    """Outer-solver parameters.

    ``q`` is the working-block width and defaults to 3p (capped at the
    matrix order); ``pcg`` defaults to a tolerance one tenth of ``eps_out``
    with at most 30 inner iterations.
    """

    p: int = 2
    q: int | None = None
    eps_out: float = 1e-5
    pcg: PcgConfig | None = None
    max_outer: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("must request at least one eigenpair")
        if self.q is not None and self.q < self.p:
            raise ValueError("block width q must be at least p")
        if self.eps_out <= 0.0:
            raise ValueError("outer tolerance must be positive")
        if self.max_outer < 1:
            raise ValueError("outer iteration cap must be at least 1")
        if self.pcg is None:
            object.__setattr__(self, "pcg", PcgConfig(eps_in=0.1 * self.eps_out, max_iters=30))

    def width(self, n):
        return min(self.q if self.q is not None else 3 * self.p, n)


@dataclass
class DeflationSet:
    """Converged eigenvectors (kept orthonormal) and their eigenvalues."""

    vectors: np.ndarray
    eigenvalues: list

    @classmethod
    def empty(cls, n):
        return cls(vectors=np.zeros((n, 0)), eigenvalues=[])

    @property
    def count(self):
        return self.vectors.shape[1]

    def add(self, vector, value, workers=None):
        v = np.ascontiguousarray(vector, dtype=np.float64)
        for _ in range(2):
            for i in range(self.count):
                u = np.ascontiguousarray(self.vectors[:, i])
                v = v - dot(u, v, workers) * u
        norm = math.sqrt(dot(v, v, workers))
        if norm < 1e-8:
            raise RuntimeError("converged column collapsed onto the deflation set")
        self.vectors = np.concatenate([self.vectors, (v / norm)[:, None]], axis=1)
        self.eigenvalues.append(float(value))


@dataclass(frozen=True)
class OuterIteration:
    """Snapshot handed to the observer after the Ritz section is formed."""

    k: int
    section: np.ndarray
    ritz_values: np.ndarray
    residuals: np.ndarray
    n_converged: int


@dataclass
class FiedlerResult:
    fiedler_vector: np.ndarray
    lambda2: float
    relative_residual: float
    outer_iterations: int
    avg_inner_iterations: float
    converged: bool
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    pair_converged: np.ndarray
    fiedler_index: int
    trace_history: list = field(default_factory=list)
    min_inner_curvature: float = math.inf
    inner_breakdowns: int = 0


def ritz_step(L, X, workers=None, rng=None):
    """Turn a block into a section: orthonormal columns diagonalizing the projection.

    Returns the section and its ascending Ritz values. A failed
    orthonormalization is retried once on the conditioned block.
    """
    X = multivector(X)
    if X.shape[0] != L.n:
        raise ValueError("block rows do not match the matrix order")
    basis = None
    for _attempt in range(2):
        candidate = orthonormalize(X, rng=rng, workers=workers)
        err = np.abs(gram(candidate, candidate, workers=workers) - np.eye(X.shape[1])).max()
        if err <= 1e-10:
            basis = candidate
            break
        X = candidate
    if basis is None:
        raise RuntimeError("failed to build an orthonormal basis for the block")
    projected = gram(basis, spmm(L, basis, workers=workers), workers=workers)
    projected = 0.5 * (projected + projected.T)
    eig = sym_eig(projected)
    return basis @ eig.eigenvectors, eig.eigenvalues


def residual_check(L, X, ritz_values, L_inf, workers=None):
    """Per-column relative residuals max|L x - rho x| / ||L||_inf."""
    if L_inf == 0.0:
        raise ValueError("degenerate Laplacian with zero norm")
    X = multivector(X)
    ritz = np.asarray(ritz_values, dtype=np.float64)
    if ritz.shape != (X.shape[1],):
        raise ValueError("one Ritz value per column is required")
    R = spmm(L, X, workers=workers) - X * ritz[None, :]
    return np.max(np.abs(R), axis=0) / L_inf


def deflate(X, deflation, workers=None):
    """Project the converged eigenvectors out of the block."""
    if deflation.count == 0:
        return X
    coeffs = gram(deflation.vectors, X, workers=workers)
    return X - deflation.vectors @ coeffs


def rayleigh_quotient(L, x, workers=None):
    """x^T L x / x^T x; invariant under scaling of x."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    norm_sq = dot(x, x, workers)
    if norm_sq == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return dot(x, spmv(L, x, workers), workers) / norm_sq


def _polish_null_vector(pair, vec, residual, cfg, workers):
    """One inverse-iteration pass through the perturbed matrix.

    The singular inner solves are consistent only to the accuracy of the
    deflated null vector, so deflation wants it essentially exact. The
    perturbed matrix amplifies null-space content by roughly the reciprocal
    of its diagonal shift in a single solve; keep the result only if it
    demonstrably tightened the eigenresidual.
    """
    vec = np.ascontiguousarray(vec, dtype=np.float64)
    refined, _report = pcg_solve(pair.L_hat, pair.D_hat, vec, cfg.pcg, workers=workers)
    norm = math.sqrt(dot(refined, refined, workers))
    if norm == 0.0 or not np.all(np.isfinite(refined)):
        return vec
    refined = refined / norm
    rho = rayleigh_quotient(pair.L, refined, workers=workers)
    new_residual = float(
        np.max(np.abs(spmv(pair.L, refined, workers) - rho * refined)) / pair.L_inf_norm
    )
    return refined if new_residual < residual else vec


def tracemin_fiedler(pair, cfg=None, workers=None, observer=None):
    """Compute the Fiedler pair (and the other p smallest eigenpairs) of a Laplacian.

    ``pair`` is a :class:`~tracemin.laplacian.LaplacianPair`. The returned
    Fiedler vector is the first converged eigenvector whose eigenvalue is not
    numerically zero; a second numerically zero eigenvalue means the graph was
    disconnected and raises :class:`DisconnectedGraphError`. Hitting the outer
    iteration cap returns the best available pair flagged unconverged.
    """
    if cfg is None:
        cfg = SolverConfig()
    L = pair.L
    L_inf = pair.L_inf_norm
    n = L.n
    if cfg.p < 2:
        raise ValueError("the Fiedler pair needs p >= 2")
    if cfg.p > n:
        raise ValueError(f"cannot compute {cfg.p} eigenpairs at order {n}")
    if L_inf == 0.0:
        raise ValueError("degenerate Laplacian with zero norm")

    rng = np.random.default_rng(cfg.seed)
    X = rng.uniform(-1.0, 1.0, (n, cfg.width(n)))
    deflation = DeflationSet.empty(n)
    null_thresh = cfg.eps_out * L_inf

    trace_history = []
    inner_iterations = []
    min_curvature = math.inf
    breakdowns = 0
    converged = False
    rest_values = np.empty(0)
    rest_vectors = np.zeros((n, 0))
    outer = 0

    for outer in range(1, cfg.max_outer + 1):
        X, ritz = ritz_step(L, X, workers=workers, rng=rng)
        residuals = residual_check(L, X, ritz, L_inf, workers=workers)
        trace_history.append(float(np.sum(ritz)))
        if observer is not None:
            observer(
                OuterIteration(
                    k=outer,
                    section=X,
                    ritz_values=ritz,
                    residuals=residuals,
                    n_converged=deflation.count,
                )
            )

        # Columns convergence-test in ascending Ritz order; only a leading run
        # may leave the block, so a pair cannot converge past a smaller one.
        take = 0
        while take < X.shape[1] and residuals[take] <= cfg.eps_out:
            take += 1
        for j in range(take):
            vec = X[:, j]
            if ritz[j] <= null_thresh:
                vec = _polish_null_vector(pair, vec, residuals[j], cfg, workers)
            deflation.add(vec, ritz[j], workers=workers)
        X = X[:, take:]
        rest_values = np.asarray(ritz[take:])
        rest_vectors = X

        if deflation.count >= cfg.p:
            converged = True
            break

        X = deflate(X, deflation, workers=workers)
        if deflation.count == 0:
            matrix, diag, singular = pair.L_hat, pair.D_hat, False
        else:
            matrix, diag, singular = pair.L, pair.D, True
        W, reports = pcg_solve_block(
            matrix, diag, X, cfg.pcg, workers=workers, singular=singular
        )
        inner_iterations.extend(r.iterations for r in reports)
        min_curvature = min(min_curvature, min(r.min_curvature for r in reports))
        breakdowns += sum(r.breakdown for r in reports)

        schur = gram(X, W, workers=workers)
        schur = 0.5 * (schur + schur.T)
        rhs = gram(X, X, workers=workers)
        try:
            combine = small_solve(schur, rhs)
        except SingularSystemError:
            # Schur breakdown: restart the block from fresh random columns.
            X = rng.uniform(-1.0, 1.0, (n, X.shape[1]))
            continue
        # The PCG solutions are only M-orthogonal to the converged null
        # vector, so the update re-acquires components along it; project the
        # deflation set back out or the next section (and its convergence
        # test) stalls on the contamination.
        X = deflate(W @ combine, deflation, workers=workers)

    return _finalize(
        L,
        L_inf,
        deflation,
        rest_values if not converged else np.empty(0),
        rest_vectors if not converged else np.zeros((n, 0)),
        null_thresh,
        p=cfg.p,
        outer_iterations=outer,
        converged=converged,
        inner_iterations=inner_iterations,
        trace_history=trace_history,
        min_curvature=min_curvature,
        breakdowns=breakdowns,
        workers=workers,
    )


def _finalize(
    L,
    L_inf,
    deflation,
    rest_values,
    rest_vectors,
    null_thresh,
    *,
    p,
    outer_iterations,
    converged,
    inner_iterations,
    trace_history,
    min_curvature,
    breakdowns,
    workers,
):
    values = list(deflation.eigenvalues) + [float(v) for v in rest_values]
    flags = [True] * deflation.count + [False] * len(rest_values)
    columns = [deflation.vectors[:, i] for i in range(deflation.count)] + [
        rest_vectors[:, i] for i in range(rest_vectors.shape[1])
    ]
    if not columns:
        raise RuntimeError("solver produced no candidate eigenpairs")

    refined = []
    for v in columns:
        u = np.ascontiguousarray(v, dtype=np.float64)
        u = u / math.sqrt(dot(u, u, workers))
        refined.append((rayleigh_quotient(L, u, workers=workers), u))
    order = sorted(range(len(refined)), key=lambda i: refined[i][0])
    lams = np.array([refined[i][0] for i in order])
    vecs = np.stack([refined[i][1] for i in order], axis=1)
    conv_flags = np.array([flags[i] for i in order])

    near_null_converged = int(np.sum((lams <= null_thresh) & conv_flags))
    if near_null_converged >= 2:
        raise DisconnectedGraphError(near_null_converged)

    keep = min(len(lams), max(p, 2))
    lams, vecs, conv_flags = lams[:keep], vecs[:, :keep], conv_flags[:keep]

    fiedler_index = None
    for i, lam in enumerate(lams):
        if lam > null_thresh:
            fiedler_index = i
            break
    if fiedler_index is None:
        fiedler_index = min(1, len(lams) - 1)

    x2 = vecs[:, fiedler_index]
    lam2 = float(lams[fiedler_index])
    residual = spmv(L, x2, workers=workers) - lam2 * x2
    rel_residual = float(np.max(np.abs(residual)) / L_inf)

    return FiedlerResult(
        fiedler_vector=x2,
        lambda2=lam2,
        relative_residual=rel_residual,
        outer_iterations=outer_iterations,
        avg_inner_iterations=float(np.mean(inner_iterations)) if inner_iterations else 0.0,
        converged=converged,
        eigenvalues=lams,
        eigenvectors=vecs,
        pair_converged=conv_flags,
        fiedler_index=fiedler_index,
        trace_history=trace_history,
        min_inner_curvature=min_curvature,
        inner_breakdowns=breakdowns,
    )
