"""Coincidence-counting kernels with a compiled fast path.

At import time the compiled extension (``_fast``, Cython) is preferred; if it
is unavailable, or the environment variable ``BPM_SPDC_NO_EXT`` is set to a
non-empty value other than ``0``, the NumPy reference backend (``_ref``) is
used. Both backends implement identical semantics and are cross-checked in
the test suite; ``BACKEND`` records which one is active.
"""

from __future__ import annotations

import os

from . import _ref

_force_ref = os.environ.get("BPM_SPDC_NO_EXT", "") not in ("", "0")

if _force_ref:
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

delay_histogram = _impl.delay_histogram
count_pairs_in_window = _impl.count_pairs_in_window
herald_window_counts = _impl.herald_window_counts
dead_time_filter = _impl.dead_time_filter


def available_backends() -> dict:
    """Importable backends by name, for benchmarks and equivalence tests."""
    backends = {"python": _ref}
    try:
        from . import _fast  # type: ignore[attr-defined]

        backends["compiled"] = _fast
    except ImportError:
        pass
    return backends
