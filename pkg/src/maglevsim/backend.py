"""Numerical backend selection for the hot kernels.

The physics inner loop is compiled with numba when available. Set
MAGLEVSIM_NUMBA=0 to force the pure-numpy fallback (same source functions,
uncompiled); useful for debugging and as a reference in benchmarks.
"""

import os

_ENV_FLAG = "MAGLEVSIM_NUMBA"


def numba_requested() -> bool:
    return os.environ.get(_ENV_FLAG, "1") != "0"


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


USE_NUMBA = numba_requested() and numba_available()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
