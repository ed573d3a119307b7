"""Optional numba acceleration.

Set ``DYNREP_NUMBA=0`` (or ``false``/``off``) before import to force the pure
numpy kernels. When numba is not installed the numpy kernels are used
regardless of the flag.
"""

import os

_FLAG = os.environ.get("DYNREP_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _FLAG not in {"0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_REQUESTED and NUMBA_AVAILABLE


# reassociation lets reductions vectorise; nan/inf semantics are kept so that
# non-finite objectives stay detectable
FASTMATH = {"reassoc", "contract", "arcp", "nsz"}


def njit(func=None, *, fastmath=False):
    """Compile ``func`` in nopython mode, or return it unchanged without numba."""
    if func is None:
        return lambda f: njit(f, fastmath=fastmath)
    if not NUMBA_AVAILABLE:
        return func
    return numba.njit(cache=True, nogil=True, fastmath=FASTMATH if fastmath else False)(func)
