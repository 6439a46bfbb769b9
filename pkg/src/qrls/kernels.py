"""
Backend selection for the filter recursions.

The compiled extension is preferred; the pure-Python module is used when the
extension was not built or when ``QRLS_PURE_PYTHON`` is set to a non-empty
value other than ``0``.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_python


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("QRLS_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_python, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_python, "python"
    return _kernels, "compiled"


backend, BACKEND_NAME = _load()

__all__ = ["backend", "BACKEND_NAME", "_kernels_python"]
