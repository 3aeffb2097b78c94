"""Backend selection for the loop-function kernel.

The compiled extension ``hadronpoles._kernels`` is used when it imports;
otherwise the pure-Python module is used.  Set ``HADRONPOLES_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("HADRONPOLES_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
loop_g = _impl.loop_g
loop_dg = _impl.loop_dg
loop_g_array = _impl.loop_g_array
loop_dg_array = _impl.loop_dg_array

python_backend = _kernels_py
