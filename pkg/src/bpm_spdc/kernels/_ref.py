"""NumPy reference implementation of the coincidence-counting kernels.

Semantics shared with the compiled backend (``_fast``):

- All timestamps are sorted int64 picoseconds.
- Coincidence windows are given by their half-width: integer delays d with
  |d| <= half_window_ps are accepted (inclusive), i.e. a window of nominal
  total width tau covers the 2*(tau_ps//2) + 1 integer delays obtained with
  half_window_ps = tau_ps // 2.
- Histogram bins are half-open [center - w/2, center + w/2) in integer
  delay, i.e. bin index = (d + K*w + w//2) // w for delays within span.
"""

from __future__ import annotations

import numpy as np


def _check_sorted(name: str, t: np.ndarray) -> None:
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ValueError(f"{name} timestamps must be sorted non-decreasing")


def delay_histogram(a_ps: np.ndarray, b_ps: np.ndarray, bin_width_ps: int, n_half_bins: int) -> np.ndarray:
    """Histogram of delays (b - a) over 2*n_half_bins + 1 centered bins."""
    a = np.ascontiguousarray(a_ps, dtype=np.int64)
    b = np.ascontiguousarray(b_ps, dtype=np.int64)
    w = int(bin_width_ps)
    k = int(n_half_bins)
    if w <= 0 or k < 0:
        raise ValueError("bin_width_ps must be positive and n_half_bins non-negative")
    n_bins = 2 * k + 1
    counts = np.zeros(n_bins, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return counts
    offset = k * w + w // 2
    total = n_bins * w
    lo = np.searchsorted(b, a - offset, side="left")
    hi = np.searchsorted(b, a + (total - offset - 1), side="right")
    mult = hi - lo
    m_total = int(mult.sum())
    if m_total == 0:
        return counts
    starts = np.cumsum(mult) - mult
    idx_b = np.arange(m_total, dtype=np.int64) - np.repeat(starts, mult) + np.repeat(lo, mult)
    delays = b[idx_b] - np.repeat(a, mult)
    np.add.at(counts, (delays + offset) // w, 1)
    return counts


def count_pairs_in_window(a_ps: np.ndarray, b_ps: np.ndarray, half_window_ps: int) -> int:
    """Number of (a, b) pairs with |t_b - t_a| <= half_window_ps."""
    a = np.ascontiguousarray(a_ps, dtype=np.int64)
    b = np.ascontiguousarray(b_ps, dtype=np.int64)
    half = int(half_window_ps)
    if half < 0:
        raise ValueError("half_window_ps must be non-negative")
    if a.size == 0 or b.size == 0:
        return 0
    lo = np.searchsorted(b, a - half, side="left")
    hi = np.searchsorted(b, a + half, side="right")
    return int((hi - lo).sum())


def herald_window_counts(
    s_ps: np.ndarray, i1_ps: np.ndarray, i2_ps: np.ndarray, half_window_ps: int
) -> tuple[int, int, int, int]:
    """Event-counted heralded coincidences around each herald.

    Returns (n_s, n_si1, n_si2, n_si1i2) where n_si1 counts heralds with at
    least one I1 event within |delay| <= half_window_ps, and n_si1i2 heralds
    with at least one event in each idler channel.
    """
    s = np.ascontiguousarray(s_ps, dtype=np.int64)
    half = int(half_window_ps)
    if half < 0:
        raise ValueError("half_window_ps must be non-negative")
    if s.size == 0:
        return (0, 0, 0, 0)

    def has_neighbor(t: np.ndarray) -> np.ndarray:
        t = np.ascontiguousarray(t, dtype=np.int64)
        if t.size == 0:
            return np.zeros(s.size, dtype=bool)
        lo = np.searchsorted(t, s - half, side="left")
        hi = np.searchsorted(t, s + half, side="right")
        return hi > lo

    has1 = has_neighbor(i1_ps)
    has2 = has_neighbor(i2_ps)
    return (int(s.size), int(has1.sum()), int(has2.sum()), int(np.count_nonzero(has1 & has2)))


def dead_time_filter(t_ps: np.ndarray, dead_ps: int) -> np.ndarray:
    """Keep-mask for a non-paralyzable dead time: an event is kept iff it is
    at least dead_ps after the previous kept event."""
    t = np.ascontiguousarray(t_ps, dtype=np.int64)
    _check_sorted("dead_time_filter", t)
    keep = np.ones(t.size, dtype=bool)
    if t.size == 0 or dead_ps <= 0:
        return keep
    last = t[0]
    for i in range(1, t.size):
        if t[i] - last < dead_ps:
            keep[i] = False
        else:
            last = t[i]
    return keep
