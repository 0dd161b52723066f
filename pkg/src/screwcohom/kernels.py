"""Kernel backend selection.

The compiled extension ``_kernels`` is used when it was built; otherwise the
NumPy fallback in ``_kernels_py``. Set ``SCREWCOHOM_PURE_PYTHON=1`` to force
the fallback.
"""
import os

from . import _kernels_py

python_backend = _kernels_py
compiled_backend = None

if not os.environ.get("SCREWCOHOM_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

small_d = backend.small_d
orbit_forcing = backend.orbit_forcing
orbit_recursion = backend.orbit_recursion
series_sum = backend.series_sum
