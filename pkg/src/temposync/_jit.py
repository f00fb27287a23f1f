"""Numba shim.

Kernels are written once as plain loops and decorated with :func:`njit`.
Setting ``TEMPOSYNC_DISABLE_JIT=1`` (or running without numba installed)
turns the decorator into a no-op and routes the kernel dispatchers in
:mod:`temposync.kernels` to their vectorised numpy twins instead.
"""

import os

_FLAG = os.environ.get("TEMPOSYNC_DISABLE_JIT", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def _identity_njit(func=None, **kwargs):
    if func is not None:
        return func

    def wrapper(f):
        return f

    return wrapper


if HAVE_NUMBA:
    njit = numba.njit
else:  # pragma: no cover
    njit = _identity_njit


def default_backend():
    """Return ``"numba"`` or ``"numpy"`` according to the environment flag."""
    return "numba" if JIT_ENABLED else "numpy"


def resolve_backend(backend):
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}; expected 'numba' or 'numpy'")
    if backend == "numba" and not HAVE_NUMBA:  # pragma: no cover
        return "numpy"
    return backend
