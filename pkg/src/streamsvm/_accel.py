"""Backend selection for the numeric kernels.

Kernels are written in the subset of numpy that numba's nopython mode
understands, so the same source runs either compiled or as plain numpy.
Set ``STREAMSVM_DISABLE_JIT=1`` before import to force the numpy path.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

DISABLE_JIT = os.environ.get("STREAMSVM_DISABLE_JIT", "").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

BACKEND = "numpy" if (DISABLE_JIT or numba is None) else "numba"


def jit(func):
    """Compile ``func`` with numba unless the numpy fallback is selected.

    The original function stays reachable as ``.py_func`` on both paths,
    which lets tests compare the two backends in one process.
    """
    if BACKEND == "numba":
        return numba.njit(cache=True, nogil=True)(func)
    func.py_func = func
    return func
