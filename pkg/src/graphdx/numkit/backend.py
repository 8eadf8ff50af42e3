"""Kernel backend selection.

The hot numeric kernels exist twice: a numba @njit build and a pure-numpy
twin with identical signatures and matching accumulation order. The active
backend is chosen once, lazily, from the GRAPHDX_BACKEND environment
variable ("numba", "numpy", or "auto"); auto prefers numba and silently
falls back to numpy when numba is unavailable.
"""

from __future__ import annotations

import os

BACKEND_ENV = "GRAPHDX_BACKEND"

_active_name: str | None = None
_active_module = None


def _load(name: str):
    if name == "numpy":
        from . import kernels_numpy
        return kernels_numpy
    if name == "numba":
        from . import kernels_numba
        return kernels_numba
    raise ValueError(f"unknown kernel backend: {name!r}")


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def set_backend(name: str) -> None:
    """Force a backend (used by tests and the benchmark script)."""
    global _active_name, _active_module
    _active_module = _load(name)
    _active_name = name


def active_backend() -> str:
    kernels()
    assert _active_name is not None
    return _active_name


def kernels():
    """The active kernel module, resolving the env flag on first use."""
    global _active_name, _active_module
    if _active_module is None:
        choice = os.environ.get(BACKEND_ENV, "auto").strip().lower() or "auto"
        if choice == "auto":
            choice = "numba" if numba_available() else "numpy"
        set_backend(choice)
    return _active_module
