"""Kernel backend selection.

Hot inner loops (splat compositing, z-buffer point rendering) exist twice:
a numba @njit implementation and a vectorized pure-numpy fallback. The
FORGE_BACKEND environment variable picks one:

    FORGE_BACKEND=numba   force numba (error if unavailable)
    FORGE_BACKEND=numpy   force the pure-numpy path
    unset / auto          numba when importable, else numpy
"""

import os

_VALID = ("auto", "numba", "numpy")


def _resolve() -> str:
    choice = os.environ.get("FORGE_BACKEND", "auto").lower()
    if choice not in _VALID:
        raise ValueError(f"FORGE_BACKEND must be one of {_VALID}, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve()


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
