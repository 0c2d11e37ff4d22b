"""Optional numba acceleration.

Hot kernels are written as plain loops over numpy arrays and decorated with
:func:`njit`.  Setting ``HHASA_DISABLE_NUMBA=1`` (or running without numba
installed) leaves them as ordinary Python functions, which is slow but
produces identical results.
"""
import os

_DISABLED = os.environ.get("HHASA_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _numba_njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def njit(func):
    if HAS_NUMBA:
        return _numba_njit(cache=True, nogil=True)(func)
    return func
