"""Kernel backend selection.

Prefers the compiled Cython extension `_corex`; falls back to the pure-numpy
module if the extension is missing or COUPLED_EQ_FORCE_FALLBACK=1 is set.
Both expose the same functions with identical semantics.
"""

import os

from . import fallback

if os.environ.get("COUPLED_EQ_FORCE_FALLBACK") == "1":
    _impl = fallback
else:
    try:
        from . import _corex as _impl
    except ImportError:
        _impl = fallback

COMPILED = bool(getattr(_impl, "COMPILED", False))

bcjr_extrinsic = _impl.bcjr_extrinsic
bcjr_forward_logz = _impl.bcjr_forward_logz
bp_iterate = _impl.bp_iterate


def backend_name():
    return "compiled" if COMPILED else "fallback"
