"""Numba acceleration with a pure-numpy/python fallback.

Hot kernels are decorated with :func:`maybe_njit`. By default they are
compiled with numba's ``@njit(cache=True)``. Setting the environment variable
``MLMOM_NO_NUMBA=1`` (before import) selects the interpreted fallback path;
the fallback executes the identical source, so results agree with the
compiled path up to floating-point library differences in the last ulp.

``benchmarks/bench_backends.py`` compares the two paths.
"""

import os

NUMBA_ENV_FLAG = "MLMOM_NO_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(NUMBA_ENV_FLAG, "").strip() not in ("1", "true", "yes")


USING_NUMBA = False
if _numba_requested():
    try:
        import numba as _numba

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _numba = None
else:
    _numba = None


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if USING_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"
