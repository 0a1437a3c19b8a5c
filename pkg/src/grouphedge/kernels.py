"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when it imports; otherwise (or when
``GROUPHEDGE_PURE_PYTHON=1``) the numpy fallback in ``_kernels_py`` is used.
"""

import os

from . import _kernels_py

if os.environ.get("GROUPHEDGE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

run_groupwise_vaw = _impl.run_groupwise_vaw
run_baseline_vaw = _impl.run_baseline_vaw

__all__ = ["BACKEND", "run_groupwise_vaw", "run_baseline_vaw"]
