"""Fiedler vectors of weighted graphs via trace minimization.

The library computes the second-smallest Laplacian eigenpair (and optionally
the p smallest) of a sparse symmetric matrix with a subspace iteration whose
update step minimizes the section trace, and applies it to spectral matrix
reordering scored by the relative-bandweight metric.
"""

from .kernels import BACKEND as kernel_backend
from .sparse import (
    RowPartition,
    SparseMatrix,
    Workers,
    dot,
    gram,
    inf_norm,
    multivector,
    partition_rows,
    spmm,
    spmv,
)
from .laplacian import (
    DisconnectedGraphError,
    EmptyGraphError,
    GraphSource,
    LaplacianPair,
    MatrixMarketError,
    build_laplacian,
    connected_components,
    load_matrix_market,
    remove_isolated,
    save_matrix_market,
    subgraph,
    symmetrize,
)
from .dense import SingularSystemError, SmallEigen, orthonormalize, small_solve, sym_eig
from .pcg import PcgConfig, PcgReport, pcg_solve, pcg_solve_block
from .solver import (
    DeflationSet,
    FiedlerResult,
    OuterIteration,
    SolverConfig,
    deflate,
    rayleigh_quotient,
    residual_check,
    ritz_step,
    tracemin_fiedler,
)
from .reorder import (
    BandweightProfile,
    Permutation,
    apply_permutation,
    bandweight,
    bandweight_profile,
    default_half_widths,
    fiedler_permutation,
)

__version__ = "0.1.0"

__all__ = [
    "BandweightProfile",
    "DeflationSet",
    "DisconnectedGraphError",
    "EmptyGraphError",
    "FiedlerResult",
    "GraphSource",
    "LaplacianPair",
    "MatrixMarketError",
    "OuterIteration",
    "PcgConfig",
    "PcgReport",
    "Permutation",
    "RowPartition",
    "SingularSystemError",
    "SmallEigen",
    "SolverConfig",
    "SparseMatrix",
    "Workers",
    "apply_permutation",
    "bandweight",
    "bandweight_profile",
    "build_laplacian",
    "connected_components",
    "default_half_widths",
    "deflate",
    "dot",
    "fiedler_permutation",
    "gram",
    "inf_norm",
    "kernel_backend",
    "load_matrix_market",
    "multivector",
    "orthonormalize",
    "partition_rows",
    "pcg_solve",
    "pcg_solve_block",
    "rayleigh_quotient",
    "remove_isolated",
    "residual_check",
    "ritz_step",
    "save_matrix_market",
    "small_solve",
    "spmm",
    "spmv",
    "subgraph",
    "sym_eig",
    "symmetrize",
    "tracemin_fiedler",
]
