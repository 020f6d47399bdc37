"""Backend selection for the hot kernels.

Set ``XXZFACT_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
The numba path is also skipped silently when numba is not importable.
"""
import os

_FLAG = "XXZFACT_DISABLE_NUMBA"


def _env_disabled():
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
HAS_NUMBA = numba is not None

USE_NUMBA = HAS_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
