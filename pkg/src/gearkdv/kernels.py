"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``GEARKDV_PURE_PYTHON=1``
to force the numpy/LAPACK fallback.
"""

import os

from . import _pykernels

_force_python = os.environ.get("GEARKDV_PURE_PYTHON", "").strip() not in ("", "0")

if _force_python:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

band_lu_factor = _impl.band_lu_factor
band_lu_solve = _impl.band_lu_solve
band_matvec = _impl.band_matvec
nonlinear_interleaved = _impl.nonlinear_interleaved
integrand_sums = _impl.integrand_sums

__all__ = [
    "BACKEND",
    "band_lu_factor",
    "band_lu_solve",
    "band_matvec",
    "nonlinear_interleaved",
    "integrand_sums",
]
