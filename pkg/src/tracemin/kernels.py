"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is used otherwise. Set TRACEMIN_KERNELS=c or TRACEMIN_KERNELS=py
to force a backend (forcing the compiled one raises if it is missing).
"""

import os
import warnings

_requested = os.environ.get("TRACEMIN_KERNELS", "").strip().lower()

if _requested == "py":
    from . import _kernels_py as impl

    BACKEND = "python"
elif _requested == "c":
    from . import _kernels_c as impl

    BACKEND = "compiled"
else:
    try:
        from . import _kernels_c as impl

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as impl

        BACKEND = "python"
        warnings.warn(
            "tracemin compiled kernels unavailable; using the pure-numpy fallback",
            RuntimeWarning,
            stacklevel=2,
        )

csr_matvec_range = impl.csr_matvec_range
csr_matmat_range = impl.csr_matmat_range
gram_range = impl.gram_range
dot_range = impl.dot_range
row_abs_sums_range = impl.row_abs_sums_range
band_mass_range = impl.band_mass_range
