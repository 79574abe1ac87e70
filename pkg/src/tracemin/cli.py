"""Command-line interface: ingestion, solving, reordering, report emission.

Each subcommand that writes files also writes a ``manifest.json`` listing
every emitted file, the resolved solver configuration, per-phase wall-clock
timings, and per-component solver statistics. Exit codes: 0 converged,
2 solver unconverged (outputs are still emitted), 1 input or solver error.
"""

from __future__ import annotations

import json
import os
import time
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from .kernels import BACKEND
from .laplacian import (
    DisconnectedGraphError,
    build_laplacian,
    connected_components,
    load_matrix_market,
    remove_isolated,
    save_matrix_market,
    subgraph,
    symmetrize,
)
from .pcg import PcgConfig
from .reorder import (
    Permutation,
    apply_permutation,
    bandweight_profile,
    default_half_widths,
    write_bandweight_csv,
    write_permutation,
)
from .solver import SolverConfig, tracemin_fiedler
from .sparse import Workers

SCHEMA_VERSION = 1


class PhaseFailure(Exception):
    """Failure tagged with the pipeline phase it happened in."""

    def __init__(self, phase, cause):
        self.phase = phase
        self.cause = cause
        super().__init__(f"error [{phase}]: {cause}")


@contextmanager
def _phase(timings, name):
    start = time.perf_counter()
    try:
        yield
    except PhaseFailure:
        raise
    except Exception as exc:
        raise PhaseFailure(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + (time.perf_counter() - start)


def _resolve_threads(threads):
    if threads is not None:
        if threads < 1:
            raise ValueError("--threads must be at least 1")
        return threads
    env = os.environ.get("FIEDLER_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"FIEDLER_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise ValueError("FIEDLER_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


def _solver_config(eps_out, eps_in, max_inner, max_outer, pairs, seed):
    inner = PcgConfig(eps_in=eps_in if eps_in is not None else 0.1 * eps_out, max_iters=max_inner)
    return SolverConfig(p=pairs, eps_out=eps_out, pcg=inner, max_outer=max_outer, seed=seed)


def solve_components(G, cfg, weighted, keep_diagonal, per_component, workers=None):
    """Solve each connected component (or require one). Returns (labels, runs)."""
    labels = connected_components(G)
    n_components = int(labels.max()) + 1
    if n_components > 1 and not per_component:
        raise DisconnectedGraphError(n_components)
    runs = []
    for comp in range(n_components):
        part = G if n_components == 1 else subgraph(G, np.flatnonzero(labels == comp))
        lap = build_laplacian(part, weighted=weighted, keep_diagonal=keep_diagonal)
        runs.append((part, tracemin_fiedler(lap, cfg, workers=workers)))
    return labels, runs


def assemble_vector(original_n, runs):
    """Scatter per-component Fiedler entries to original indices (others 0)."""
    full = np.zeros(original_n)
    for part, result in runs:
        full[part.kept_vertices] = result.fiedler_vector
    return full


def assemble_permutation(original_n, G, labels, runs):
    """Order vertices by (component, Fiedler value); dropped vertices go last.

    For a connected graph with nothing dropped this reduces to the plain
    stable ascending sort of the Fiedler vector.
    """
    n_components = int(labels.max()) + 1
    component = np.full(original_n, n_components, dtype=np.int64)
    component[G.kept_vertices] = labels
    values = assemble_vector(original_n, runs)
    return Permutation.from_forward(np.lexsort((values, component)))


def _run_meta(index, part, result):
    return {
        "component": index,
        "n": int(part.n),
        "lambda2": float(result.lambda2),
        "relative_residual": float(result.relative_residual),
        "converged": bool(result.converged),
        "outer_iterations": int(result.outer_iterations),
        "avg_inner_iterations": float(result.avg_inner_iterations),
        "eigenvalues": [float(v) for v in result.eigenvalues],
    }


def _write_manifest(path, payload):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_vector(path, vector):
    with open(path, "w", encoding="ascii") as fh:
        for v in vector.tolist():
            fh.write(f"{v:.17g}\n")


def write_spy_svg(path, A, cells=64, size=480):
    """Coarse density grid as SVG rectangles colored blue -> red by log magnitude."""
    g = min(cells, A.n)
    rows, cols, vals = A.coo()
    mag = np.zeros((g, g))
    if len(vals):
        np.maximum.at(mag, ((rows * g) // A.n, (cols * g) // A.n), np.abs(vals))
    filled = mag > 0.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white" stroke="black"/>',
    ]
    if np.any(filled):
        logs = np.log10(mag[filled])
        lo, hi = float(logs.min()), float(logs.max())
        span = hi - lo
        cell = size / g
        for (r, c), value in zip(np.argwhere(filled).tolist(), logs.tolist()):
            t = 1.0 if span == 0.0 else (value - lo) / span
            color = f"rgb({int(30 + 225 * t)},40,{int(255 - 225 * t)})"
            parts.append(
                f'<rect x="{c * cell:.2f}" y="{r * cell:.2f}" '
                f'width="{cell:.2f}" height="{cell:.2f}" fill="{color}"/>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")


def _resolve_half_widths(requested, n):
    if not requested:
        return default_half_widths(n)
    ks = []
    for k in requested:
        if k > n:
            click.echo(f"warning: half-width {k} exceeds the matrix order; clamped to {n}", err=True)
            k = n
        ks.append(k)
    return np.unique(np.asarray(ks, dtype=np.int64))


def _solver_meta(cfg, threads, weighted, keep_diagonal, per_component):
    return {
        "p": cfg.p,
        "q": cfg.q,
        "eps_out": cfg.eps_out,
        "eps_in": cfg.pcg.eps_in,
        "max_inner": cfg.pcg.max_iters,
        "max_outer": cfg.max_outer,
        "seed": cfg.seed,
        "threads": threads,
        "weighted": weighted,
        "keep_diagonal": keep_diagonal,
        "per_component": per_component,
        "kernel_backend": BACKEND,
    }


_solver_option_defs = [
    click.option("--input", "input_path", required=True, type=click.Path(path_type=Path)),
    click.option("--output-dir", type=click.Path(path_type=Path), default=Path("."), show_default=True),
    click.option("--eps-out", type=float, default=1e-5, show_default=True, help="outer residual tolerance"),
    click.option("--eps-in", type=float, default=None, help="inner PCG tolerance [default: eps-out/10]"),
    click.option("--max-inner", type=int, default=30, show_default=True, help="PCG iteration cap"),
    click.option("--max-outer", type=int, default=200, show_default=True, help="outer iteration cap"),
    click.option("--p", "pairs", type=int, default=2, show_default=True, help="eigenpairs to compute"),
    click.option("--seed", type=int, default=0, show_default=True, help="seed for the starting block"),
    click.option("--threads", type=int, default=None, help="worker blocks [default: FIEDLER_THREADS or CPU count]"),
    click.option("--unweighted", is_flag=True, help="replace every weight by 1"),
    click.option("--keep-diagonal", is_flag=True, help="fold |A(i,i)| into the Laplacian diagonal"),
    click.option("--per-component", is_flag=True, help="solve disconnected components independently"),
]


def _solver_options(fn):
    for deco in reversed(_solver_option_defs):
        fn = deco(fn)
    return fn


@click.group()
def main():
    """Fiedler vectors of sparse matrices by trace minimization, plus spectral reordering."""


@main.command("fiedler")
@_solver_options
def cmd_fiedler(input_path, output_dir, eps_out, eps_in, max_inner, max_outer, pairs, seed,
                threads, unweighted, keep_diagonal, per_component):
    """Compute the Fiedler vector and write it with a JSON manifest."""
    raise SystemExit(
        run_fiedler(input_path, output_dir, eps_out, eps_in, max_inner, max_outer, pairs,
                    seed, threads, unweighted, keep_diagonal, per_component)
    )


@main.command("reorder")
@_solver_options
@click.option("--plots", is_flag=True, help="emit SVG spy plots of both matrices")
@click.option("--k", "half_widths", type=click.IntRange(min=1), multiple=True,
              help="bandweight half-width (repeatable) [default: 32 log-spaced]")
def cmd_reorder(input_path, output_dir, eps_out, eps_in, max_inner, max_outer, pairs, seed,
                threads, unweighted, keep_diagonal, per_component, plots, half_widths):
    """Reorder a matrix by its Fiedler vector and score it with bandweight profiles."""
    raise SystemExit(
        run_reorder(input_path, output_dir, eps_out, eps_in, max_inner, max_outer, pairs,
                    seed, threads, unweighted, keep_diagonal, per_component, plots, half_widths)
    )


@main.command("bandweight")
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
@click.option("--output", "output_path", type=click.Path(path_type=Path), default=None,
              help="CSV destination [default: stdout]")
@click.option("--k", "half_widths", type=click.IntRange(min=1), multiple=True,
              help="half-width (repeatable) [default: 32 log-spaced]")
@click.option("--threads", type=int, default=None)
def cmd_bandweight(input_path, output_path, half_widths, threads):
    """Print or write the relative-bandweight profile of a matrix."""
    raise SystemExit(run_bandweight(input_path, output_path, half_widths, threads))


def run_fiedler(input_path, output_dir, eps_out, eps_in, max_inner, max_outer, pairs, seed,
                threads, unweighted, keep_diagonal, per_component):
    timings = {}
    workers = None
    try:
        with _phase(timings, "configure"):
            cfg = _solver_config(eps_out, eps_in, max_inner, max_outer, pairs, seed)
            n_threads = _resolve_threads(threads)
            workers = Workers(n_threads)
        with _phase(timings, "load"):
            A = load_matrix_market(input_path)
        with _phase(timings, "preprocess"):
            G = remove_isolated(symmetrize(A))
        with _phase(timings, "solve"):
            labels, runs = solve_components(
                G, cfg, not unweighted, keep_diagonal, per_component, workers
            )
        with _phase(timings, "emit"):
            output_dir = Path(output_dir)
            output_dir.mkdir(parents=True, exist_ok=True)
            vector_path = output_dir / "fiedler_vector.txt"
            manifest_path = output_dir / "manifest.json"
            _write_vector(vector_path, assemble_vector(A.n, runs))
            payload = {
                "schema_version": SCHEMA_VERSION,
                "subcommand": "fiedler",
                "input": str(input_path),
                "outputs": [str(vector_path), str(manifest_path)],
                "timings_s": timings,
                "solver": _solver_meta(cfg, n_threads, not unweighted, keep_diagonal, per_component),
                "matrix": {
                    "original_n": A.n,
                    "nnz": A.nnz,
                    "preprocessed_n": G.n,
                    "components": int(labels.max()) + 1,
                },
                "runs": [_run_meta(i, part, res) for i, (part, res) in enumerate(runs)],
            }
            _write_manifest(manifest_path, payload)
        for i, (part, res) in enumerate(runs):
            state = "converged" if res.converged else "NOT converged"
            click.echo(
                f"component {i}: lambda2 = {res.lambda2:.10g}, "
                f"relative residual = {res.relative_residual:.3e} ({state})"
            )
        return 0 if all(res.converged for _, res in runs) else 2
    except PhaseFailure as failure:
        click.echo(str(failure), err=True)
        return 1
    finally:
        if workers is not None:
            workers.close()


def run_reorder(input_path, output_dir, eps_out, eps_in, max_inner, max_outer, pairs, seed,
                threads, unweighted, keep_diagonal, per_component, plots, half_widths):
    timings = {}
    workers = None
    try:
        with _phase(timings, "configure"):
            cfg = _solver_config(eps_out, eps_in, max_inner, max_outer, pairs, seed)
            n_threads = _resolve_threads(threads)
            workers = Workers(n_threads)
        with _phase(timings, "load"):
            A = load_matrix_market(input_path)
        with _phase(timings, "preprocess"):
            G = remove_isolated(symmetrize(A))
        with _phase(timings, "solve"):
            labels, runs = solve_components(
                G, cfg, not unweighted, keep_diagonal, per_component, workers
            )
        with _phase(timings, "reorder"):
            perm = assemble_permutation(A.n, G, labels, runs)
            reordered = apply_permutation(A, perm)
            ks = _resolve_half_widths(half_widths, A.n)
            profile_original = bandweight_profile(A, ks, workers=workers)
            profile_reordered = bandweight_profile(reordered, ks, workers=workers)
        with _phase(timings, "emit"):
            output_dir = Path(output_dir)
            output_dir.mkdir(parents=True, exist_ok=True)
            paths = {
                "permutation": output_dir / "permutation.txt",
                "reordered": output_dir / "reordered.mtx",
                "bw_original": output_dir / "bandweight_original.csv",
                "bw_reordered": output_dir / "bandweight_reordered.csv",
            }
            write_permutation(
                paths["permutation"], perm, matrix_name=Path(input_path).stem,
                lambda2=runs[0][1].lambda2,
            )
            save_matrix_market(
                paths["reordered"], reordered,
                comment=f"Fiedler reordering of {Path(input_path).name}",
            )
            write_bandweight_csv(paths["bw_original"], profile_original)
            write_bandweight_csv(paths["bw_reordered"], profile_reordered)
            if plots:
                paths["spy_original"] = output_dir / "spy_original.svg"
                paths["spy_reordered"] = output_dir / "spy_reordered.svg"
                write_spy_svg(paths["spy_original"], A)
                write_spy_svg(paths["spy_reordered"], reordered)
            manifest_path = output_dir / "manifest.json"
            payload = {
                "schema_version": SCHEMA_VERSION,
                "subcommand": "reorder",
                "input": str(input_path),
                "outputs": [str(p) for p in paths.values()] + [str(manifest_path)],
                "timings_s": timings,
                "solver": _solver_meta(cfg, n_threads, not unweighted, keep_diagonal, per_component),
                "matrix": {
                    "original_n": A.n,
                    "nnz": A.nnz,
                    "preprocessed_n": G.n,
                    "components": int(labels.max()) + 1,
                },
                "runs": [_run_meta(i, part, res) for i, (part, res) in enumerate(runs)],
                "reorder": {
                    "half_widths": [int(k) for k in ks.tolist()],
                    "bandweight_original": [float(w) for w in profile_original.weights],
                    "bandweight_reordered": [float(w) for w in profile_reordered.weights],
                },
            }
            _write_manifest(manifest_path, payload)
        click.echo(
            "bandweight at k=2: "
            f"original {_weight_at(profile_original, 2):.4f} -> "
            f"reordered {_weight_at(profile_reordered, 2):.4f}"
        )
        return 0 if all(res.converged for _, res in runs) else 2
    except PhaseFailure as failure:
        click.echo(str(failure), err=True)
        return 1
    finally:
        if workers is not None:
            workers.close()


def _weight_at(profile, k):
    ks = profile.half_widths.tolist()
    if k in ks:
        return float(profile.weights[ks.index(k)])
    return float(profile.weights[min(range(len(ks)), key=lambda i: abs(ks[i] - k))])


def run_bandweight(input_path, output_path, half_widths, threads):
    timings = {}
    workers = None
    try:
        with _phase(timings, "configure"):
            workers = Workers(_resolve_threads(threads))
        with _phase(timings, "load"):
            A = load_matrix_market(input_path)
        with _phase(timings, "bandweight"):
            ks = _resolve_half_widths(half_widths, A.n)
            profile = bandweight_profile(A, ks, workers=workers)
        if output_path is None:
            lines = ["k,bandweight"] + [
                f"{int(k)},{w:.17g}"
                for k, w in zip(profile.half_widths.tolist(), profile.weights.tolist())
            ]
            click.echo("\n".join(lines))
        else:
            write_bandweight_csv(output_path, profile)
        return 0
    except PhaseFailure as failure:
        click.echo(str(failure), err=True)
        return 1
    finally:
        if workers is not None:
            workers.close()
