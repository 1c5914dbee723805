"""Forest kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``SCAM_RADAR_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("SCAM_RADAR_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

best_split = _impl.best_split
apply_tree = _impl.apply_tree
