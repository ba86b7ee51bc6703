"""Backend selection for the hot inner loops.

The compiled core (Cython) and the numpy fallback implement the same
sequential left-to-right reductions, so results are bit-identical across
backends; only throughput differs.  Selection happens once at import:

* ``SVEKIT_BACKEND=compiled``  require the extension, raise if missing
* ``SVEKIT_BACKEND=fallback``  force the pure-numpy implementation
* unset / ``auto``             prefer compiled, fall back silently
"""

import os

_requested = os.environ.get("SVEKIT_BACKEND", "auto")
if _requested not in ("auto", "compiled", "fallback"):
    raise RuntimeError(f"SVEKIT_BACKEND must be auto, compiled or fallback, "
                       f"got {_requested!r}")

BACKEND = "fallback"
if _requested in ("auto", "compiled"):
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import fallback as _impl
else:
    from . import fallback as _impl

weighted_state_update = _impl.weighted_state_update

__all__ = ["BACKEND", "weighted_state_update"]
