"""Numba switch.

Set ``FRONTBLOCK_NUMBA=0`` in the environment to run every kernel through its
pure-numpy twin. The flag is read once, at import.
"""
import os

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("FRONTBLOCK_NUMBA", "1").lower() not in ("0", "false", "no", "off")


def njit(func):
    """``numba.njit(cache=True)`` when numba is enabled, otherwise ``func`` unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func
