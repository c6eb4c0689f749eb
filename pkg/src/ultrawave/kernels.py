"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set ``ULTRAWAVE_PURE=1`` to force the fallback (used by the benchmark and by
the equivalence tests).
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("ULTRAWAVE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

assoc_max = _impl.assoc_max
m2_profile = _impl.m2_profile
ring_profile = _impl.ring_profile

__all__ = ["BACKEND", "assoc_max", "m2_profile", "ring_profile"]
