"""Switch between numba-compiled kernels and the plain Python/numpy path.

Set ``CHAOSCOMM_NUMBA=0`` before import to run every kernel as ordinary
Python. The kernels are written in the numba-compatible subset, so both
paths execute the same source.
"""

import os

_requested = os.environ.get("CHAOSCOMM_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = _requested and numba is not None
BACKEND = "numba" if USE_NUMBA else "python"


def jit(fn):
    """Compile ``fn`` with ``numba.njit`` when enabled, else return it as is."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn
