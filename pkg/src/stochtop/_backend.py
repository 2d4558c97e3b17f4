"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise, or when
``STOCHTOP_BACKEND=python`` is set, the numpy fallback in ``_purepy`` is.
"""
import os

from . import _purepy

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

BACKENDS = {"python": _purepy}
if _core is not None:
    BACKENDS["cython"] = _core

kernels = _purepy
name = "python"


def set_backend(which: str) -> None:
    global kernels, name
    if which not in BACKENDS:
        raise ValueError(f"backend {which!r} unavailable; have {sorted(BACKENDS)}")
    kernels = BACKENDS[which]
    name = which


set_backend(os.environ.get("STOCHTOP_BACKEND", "cython" if _core is not None else "python"))
