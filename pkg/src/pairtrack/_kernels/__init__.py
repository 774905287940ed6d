"""Hot-kernel backend selection.

The compiled Cython core is used when its extension module built; otherwise
the numpy fallback is selected. Set ``PAIRTRACK_PURE=1`` to force the
fallback (useful for benchmarking and debugging).
"""

import os

from . import _fallback

if os.environ.get("PAIRTRACK_PURE", "").strip() in ("", "0"):
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

BACKEND = _impl.BACKEND
batch_mvn_logpdf = _impl.batch_mvn_logpdf
systematic_resample_indices = _impl.systematic_resample_indices


def backend_name():
    """Name of the active kernel backend: "compiled" or "python"."""
    return BACKEND
