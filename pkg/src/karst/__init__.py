"""Finite elements and anisotropic residual estimators for a coupled
matrix/conduit karst aquifer model."""

import os as _os

# optional thread cap; must be set before numpy loads its BLAS
_threads = _os.environ.get("KARST_NUM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
