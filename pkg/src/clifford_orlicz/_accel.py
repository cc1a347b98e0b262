"""Numba switch for the hot kernels.

Set ``CLIFFORD_ORLICZ_NUMBA=0`` in the environment to force the pure-numpy
paths (useful when numba is unavailable or for debugging). The backend can
also be switched at runtime with :func:`set_backend`.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
}

_state = {
    "backend": "numba"
    if HAVE_NUMBA and os.environ.get("CLIFFORD_ORLICZ_NUMBA", "1") != "0"
    else "numpy"
}


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(**numba_default)(fn)


def backend():
    return _state["backend"]


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev = _state["backend"]
    _state["backend"] = name
    return prev
