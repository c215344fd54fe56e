"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``QUBITMAPS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("QUBITMAPS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

BACKEND = "cython" if compiled_backend is not None else "python"
_impl = compiled_backend if compiled_backend is not None else python_backend

map_components = python_backend.map_components
propagator_functions = python_backend.propagator_functions


def map_grid(t, wp, cp, sp, wm, cm, sm, x, y, z):
    import numpy as np

    t = np.ascontiguousarray(np.atleast_1d(t), dtype=float)
    return _impl.map_grid(t, float(wp), float(cp), float(sp), float(wm), float(cm),
                          float(sm), float(x), float(y), float(z))


def max_product_concurrence(G, states):
    # the numpy version rides on BLAS via einsum and beats the compiled loop
    # (see benchmarks/bench_kernels.py), so it is used on both backends
    return python_backend.max_product_concurrence(G, states)
