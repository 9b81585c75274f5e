"""Numeric backend selection.

The heavy data-movement loops (pooling, im2col, canvas packing) exist twice:
once as numba @njit kernels and once as pure numpy. The environment variable
DISTILLKIT_BACKEND picks the path:

    auto   - numba when importable, numpy otherwise (default)
    numba  - require numba, fail loudly if missing
    numpy  - force the pure numpy path

Matrix contractions always go through BLAS via numpy regardless of backend.
"""

import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

_FLAG = os.environ.get("DISTILLKIT_BACKEND", "auto").strip().lower()

if _FLAG not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"DISTILLKIT_BACKEND must be one of auto|numba|numpy, got {_FLAG!r}")
if _FLAG == "numba" and not HAVE_NUMBA:
    raise ImportError("DISTILLKIT_BACKEND=numba but numba is not installed")

_ACTIVE = "numba" if (_FLAG == "numba" or (_FLAG == "auto" and HAVE_NUMBA)) else "numpy"


def active_backend():
    """Name of the backend currently in use: 'numba' or 'numpy'."""
    return _ACTIVE


def set_backend(name):
    """Switch backend at runtime (used by tests and the benchmark script).

    Returns the previous backend name.
    """
    global _ACTIVE
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise ImportError("numba backend requested but numba is not installed")
    prev = _ACTIVE
    _ACTIVE = name
    from . import kernels
    kernels.rebind()
    return prev
