"""Integrator backend selection.

The compiled `_kernels` extension is used when importable; otherwise the
NumPy implementation in `_kernels_py` takes over with identical semantics.
Set FLOQRYD_KERNEL=py to force the fallback (useful for benchmarking and
for cross-checking the two backends).
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("FLOQRYD_KERNEL", "").lower() in ("py", "numpy", "python"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
STATUS_OK: int = _impl.STATUS_OK
STATUS_UNDERFLOW: int = _impl.STATUS_UNDERFLOW

integrate_interval = _impl.integrate_interval
eval_coefficients = _impl.eval_coefficients


def backends() -> dict[str, object]:
    """All importable backends, keyed by name (for benchmarks and tests)."""
    found: dict[str, object] = {"numpy": _kernels_py}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
