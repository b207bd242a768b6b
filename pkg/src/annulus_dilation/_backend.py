"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``ANNULUS_DILATION_PURE=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("ANNULUS_DILATION_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

jacobi_svd = kernels.jacobi_svd
jacobi_eigh = kernels.jacobi_eigh
jk_series = kernels.jk_series
