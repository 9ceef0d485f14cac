"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-NumPy
fallback. Set ``ABAE_PURE_PYTHON=1`` to force the fallback (useful for
benchmarking; see ``benchmarks/kernel_bench.py``).
"""

import os

from . import _fallback

if os.environ.get("ABAE_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = "python" if _impl is _fallback else "compiled"

shuffle_draw = _impl.shuffle_draw
resample_stratum = _impl.resample_stratum


def get_backends():
    """Return ``{name: module}`` for every importable backend."""
    backends = {"python": _fallback}
    try:
        from . import _core

        backends["compiled"] = _core
    except ImportError:
        pass
    return backends
