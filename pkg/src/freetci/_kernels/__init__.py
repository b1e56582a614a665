"""Sweep-kernel dispatch: compiled extension when available, numpy fallback
otherwise.  Set ``FREETCI_PURE=1`` to force the fallback (used by the
benchmark and by tests that compare backends)."""

import os

if os.environ.get("FREETCI_PURE"):
    from . import fallback as impl
else:
    try:
        from . import _logas as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import fallback as impl

BACKEND = impl.BACKEND
sweep_line = impl.sweep_line
sweep_circle = impl.sweep_circle
sweep_circle_paired = impl.sweep_circle_paired

__all__ = ["BACKEND", "sweep_line", "sweep_circle", "sweep_circle_paired"]
