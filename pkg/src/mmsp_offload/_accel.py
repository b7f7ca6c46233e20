"""Backend selection for the hot loops.

Set ``MMSP_OFFLOAD_BACKEND=numpy`` to run every kernel as plain Python/numpy
(no JIT). The default is ``numba`` when it imports, otherwise ``numpy``.
"""
from __future__ import annotations

import os

_requested = os.environ.get("MMSP_OFFLOAD_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"MMSP_OFFLOAD_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

HAS_NUMBA = False
if _requested == "numba":
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

BACKEND = "numba" if HAS_NUMBA else "numpy"


def jit(func):
    """Compile ``func`` with ``numba.njit`` when the numba backend is active."""
    if HAS_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def compile_always(func):
    """Compile regardless of the env flag (benchmarks compare both paths)."""
    import numba as _nb

    return _nb.njit(cache=True)(func)
