"""Hot-loop kernels: the compiled extension when built, numpy otherwise.

``BACKEND`` is ``"cython"`` or ``"python"``.  Setting QUADSUB_PURE_PYTHON=1
forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("QUADSUB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

riccati_rk4 = _impl.riccati_rk4
hermite_functions = _impl.hermite_functions
