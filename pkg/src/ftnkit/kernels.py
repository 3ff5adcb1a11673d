"""Hot-loop dispatch: compiled extension when importable, numpy otherwise.

Set ``FTNKIT_PURE_PYTHON=1`` to force the numpy path (used by the benchmark
and the equivalence tests).
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("FTNKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

nearest_index = _impl.nearest_index
waterfill_cutoff = _impl.waterfill_cutoff
TIE_EPS = _kernels_py.TIE_EPS

__all__ = ["BACKEND", "TIE_EPS", "nearest_index", "waterfill_cutoff"]
