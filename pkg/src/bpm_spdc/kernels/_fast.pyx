# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled two-pointer coincidence kernels over sorted int64 picosecond tags.

Same contracts as the NumPy reference backend (see _ref.py): inclusive
|d| <= half_window_ps windows, half-open histogram bins, O(N + matches)
sweeps.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def delay_histogram(a_ps, b_ps, bin_width_ps, n_half_bins):
    cdef cnp.int64_t[::1] a = np.ascontiguousarray(a_ps, dtype=np.int64)
    cdef cnp.int64_t[::1] b = np.ascontiguousarray(b_ps, dtype=np.int64)
    cdef long long w = bin_width_ps
    cdef Py_ssize_t k = n_half_bins
    if w <= 0 or k < 0:
        raise ValueError("bin_width_ps must be positive and n_half_bins non-negative")
    cdef Py_ssize_t n_bins = 2 * k + 1
    counts_arr = np.zeros(n_bins, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef long long offset = (<long long> k) * w + w // 2
    cdef long long total = (<long long> n_bins) * w
    cdef Py_ssize_t i, j, lo = 0, hi = 0
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef long long lo_t, hi_t
    if na == 0 or nb == 0:
        return counts_arr
    for i in range(na):
        lo_t = a[i] - offset
        hi_t = a[i] + (total - offset)
        while lo < nb and b[lo] < lo_t:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < nb and b[hi] < hi_t:
            hi += 1
        for j in range(lo, hi):
            counts[(b[j] - a[i] + offset) // w] += 1
    return counts_arr


def count_pairs_in_window(a_ps, b_ps, half_window_ps):
    cdef cnp.int64_t[::1] a = np.ascontiguousarray(a_ps, dtype=np.int64)
    cdef cnp.int64_t[::1] b = np.ascontiguousarray(b_ps, dtype=np.int64)
    if half_window_ps < 0:
        raise ValueError("half_window_ps must be non-negative")
    cdef long long half = half_window_ps
    cdef Py_ssize_t i, lo = 0, hi = 0
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef long long n = 0
    if na == 0 or nb == 0:
        return 0
    for i in range(na):
        while lo < nb and b[lo] < a[i] - half:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < nb and b[hi] <= a[i] + half:
            hi += 1
        n += hi - lo
    return int(n)


def herald_window_counts(s_ps, i1_ps, i2_ps, half_window_ps):
    cdef cnp.int64_t[::1] s = np.ascontiguousarray(s_ps, dtype=np.int64)
    cdef cnp.int64_t[::1] t1 = np.ascontiguousarray(i1_ps, dtype=np.int64)
    cdef cnp.int64_t[::1] t2 = np.ascontiguousarray(i2_ps, dtype=np.int64)
    if half_window_ps < 0:
        raise ValueError("half_window_ps must be non-negative")
    cdef long long half = half_window_ps
    cdef Py_ssize_t i, lo1 = 0, hi1 = 0, lo2 = 0, hi2 = 0
    cdef Py_ssize_t ns = s.shape[0], n1 = t1.shape[0], n2 = t2.shape[0]
    cdef long long c1 = 0, c2 = 0, c12 = 0
    cdef bint has1, has2
    for i in range(ns):
        while lo1 < n1 and t1[lo1] < s[i] - half:
            lo1 += 1
        if hi1 < lo1:
            hi1 = lo1
        while hi1 < n1 and t1[hi1] <= s[i] + half:
            hi1 += 1
        while lo2 < n2 and t2[lo2] < s[i] - half:
            lo2 += 1
        if hi2 < lo2:
            hi2 = lo2
        while hi2 < n2 and t2[hi2] <= s[i] + half:
            hi2 += 1
        has1 = hi1 > lo1
        has2 = hi2 > lo2
        if has1:
            c1 += 1
        if has2:
            c2 += 1
        if has1 and has2:
            c12 += 1
    return (int(ns), int(c1), int(c2), int(c12))


def dead_time_filter(t_ps, dead_ps):
    cdef cnp.int64_t[::1] t = np.ascontiguousarray(t_ps, dtype=np.int64)
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i
    keep_arr = np.ones(n, dtype=bool)
    cdef cnp.uint8_t[::1] keep = keep_arr.view(np.uint8)
    cdef long long dead = dead_ps
    cdef long long last
    for i in range(1, n):
        if t[i] < t[i - 1]:
            raise ValueError("dead_time_filter timestamps must be sorted non-decreasing")
    if n == 0 or dead <= 0:
        return keep_arr
    last = t[0]
    for i in range(1, n):
        if t[i] - last < dead:
            keep[i] = 0
        else:
            last = t[i]
    return keep_arr
