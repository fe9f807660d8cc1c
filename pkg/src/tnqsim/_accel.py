"""Selection between numba-compiled kernels and the pure-numpy fallback.

Set ``TNQSIM_DISABLE_NUMBA=1`` before import to force the numpy path.
"""

import os

DISABLE_ENV = "TNQSIM_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False


def _disabled_by_env():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def njit(fn):
    """Compile ``fn`` with numba when it is installed, else return it unchanged.

    Compilation happens regardless of ``USE_NUMBA`` so the two paths can be
    compared inside one process; dispatch is decided in :mod:`tnqsim.kernels`.
    """
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
