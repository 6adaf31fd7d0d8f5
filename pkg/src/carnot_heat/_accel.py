"""Numba switch.

Hot kernels are written twice: a numba version (scalar loops, in-kernel RNG)
and a vectorized numpy version. Setting ``CARNOT_HEAT_NO_NUMBA=1`` in the
environment before import selects the numpy path everywhere.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("CARNOT_HEAT_NO_NUMBA", "0") not in ("1", "true", "yes")

NJIT_OPTS = {"nogil": True, "cache": False, "error_model": "numpy"}


def njit(func=None, **kwargs):
    """``numba.njit`` with the package defaults; identity when numba is off."""
    opts = dict(NJIT_OPTS)
    opts.update(kwargs)

    def wrap(f):
        if not USE_NUMBA:
            return f
        return numba.njit(**opts)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"
