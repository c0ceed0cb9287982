"""Kernel backend selection.

The compiled extension is used when importable. Setting ``CDRINCOME_PURE=1``
before import forces the interpreted fallback.
"""
from __future__ import annotations

import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

fallback = _fallback

if compiled is not None and os.environ.get("CDRINCOME_PURE", "") not in ("1", "true", "yes"):
    _impl = compiled
    BACKEND = "compiled"
else:
    _impl = _fallback
    BACKEND = "python"
    if compiled is None:
        log.debug("compiled kernels unavailable; using the Python fallback")

level_features = _impl.level_features
best_split = _impl.best_split
