"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``PLAPLOG_BACKEND=python``
forces the NumPy fallback. Both expose ``integrals``, ``step``,
``step_size`` and ``advance`` with identical semantics.
"""

import os

from . import _fallback

fallback = _fallback
compiled = None

if os.environ.get("PLAPLOG_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else fallback
BACKEND = active.BACKEND

integrals = active.integrals
step = active.step
step_size = active.step_size
advance = active.advance

STATUS_STEPS = _fallback.STATUS_STEPS
STATUS_HORIZON = _fallback.STATUS_HORIZON
STATUS_THRESHOLD = _fallback.STATUS_THRESHOLD
STATUS_FLOOR = _fallback.STATUS_FLOOR
