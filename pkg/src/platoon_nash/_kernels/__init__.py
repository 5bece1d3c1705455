"""Hot inner loops, compiled when possible.

The Cython extension ``_ckernels`` is preferred; if it was not built (or
``PLATOON_NASH_PURE=1`` is set) the numpy versions in ``_pykernels`` are
used instead. ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

if os.environ.get("PLATOON_NASH_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not compiled
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

rk4_affine = _impl.rk4_affine
last_above = _impl.last_above

__all__ = ["BACKEND", "rk4_affine", "last_above"]
