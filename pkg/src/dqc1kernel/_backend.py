"""Solver backend selection.

The compiled SMO core (``dqc1kernel._core``, Cython) is preferred; the
NumPy implementation in ``_smo_py`` is the fallback when the extension was
not built.  Set ``DQC1KERNEL_PURE=1`` to force the fallback, e.g. for the
backend benchmark or to reproduce a pure-Python environment.
"""
from __future__ import annotations

import os

from . import _smo_py

if os.environ.get("DQC1KERNEL_PURE"):
    _core = None
else:
    try:
        from . import _core
    except ImportError:
        _core = None

BACKEND = "compiled" if _core is not None else "pure-python"

smo_solve = _core.smo_solve if _core is not None else _smo_py.smo_solve


def solver_backends() -> dict:
    """Both backends by name, for tests and the benchmark harness."""
    out = {"pure-python": _smo_py.smo_solve}
    if _core is not None:
        out["compiled"] = _core.smo_solve
    return out
