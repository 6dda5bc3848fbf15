"""Backend selection for the integrator kernel.

The compiled extension is used when it imports; otherwise, or when
``HIFDETECT_PURE_PYTHON=1`` is set, the pure-Python twin is used.
"""

import os

from . import _kernels_py

BACKEND = "python"
integrate = _kernels_py.integrate

if os.environ.get("HIFDETECT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        integrate = _compiled.integrate
        BACKEND = "cython"


def backends():
    """Map of every importable backend name to its ``integrate``."""
    out = {"python": _kernels_py.integrate}
    try:
        from . import _kernels as _compiled
        out["cython"] = _compiled.integrate
    except ImportError:
        pass
    return out
