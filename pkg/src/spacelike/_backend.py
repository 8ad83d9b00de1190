"""Pick the compiled core when it is importable, else the pure-Python one.

Set ``SPACELIKE_BACKEND=python`` to force the fallback (used by the tests
that compare the two).
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("SPACELIKE_BACKEND", "").lower() == "python":
    core = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as core
        BACKEND = "cython"
    except ImportError:
        core = _fallback
        BACKEND = "python"

hermitian_eigvals_batch = core.hermitian_eigvals_batch
particle_events = core.particle_events
