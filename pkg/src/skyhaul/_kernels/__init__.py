"""Kernel backend selection: compiled Cython core with pure-Python fallback.

The compiled module is used when present; set SKYHAUL_PURE=1 to force the
fallback (the benchmark suite compares the two). Both backends implement
the same algorithms with identical tie-breaking.
"""

import os

from . import _fallback

SUM_RATE = _fallback.SUM_RATE
MIN_RATE = _fallback.MIN_RATE
PROP_FAIR = _fallback.PROP_FAIR

if os.environ.get("SKYHAUL_PURE", "").strip() not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback


def backend_name() -> str:
    return "compiled" if _impl.__name__.endswith("_core") else "fallback"


def backends() -> dict:
    """All importable backends by name (used by tests and benchmarks)."""
    found = {"fallback": _fallback}
    try:
        from . import _core
        found["compiled"] = _core
    except ImportError:
        pass
    return found


greedy_assign = _impl.greedy_assign
waterfill = _impl.waterfill
waterfill_groups = _impl.waterfill_groups
