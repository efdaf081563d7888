# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled inverse-CDF sampling loops; see _sampling_py for the reference."""

import numpy as np


cdef inline Py_ssize_t _search(const double[::1] cdf, double u) noexcept nogil:
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = cdf.shape[0]
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < cdf[mid]:
            hi = mid
        else:
            lo = mid + 1
    if lo == cdf.shape[0]:
        lo -= 1
    return lo


def inverse_cdf(const double[::1] cdf, const double[::1] u):
    cdef Py_ssize_t n = u.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = _search(cdf, u[i])
    return out


def two_stage(const double[::1] outer_cdf, const double[:, ::1] row_cdfs,
              const double[::1] u1, const double[::1] u2):
    cdef Py_ssize_t n = u1.shape[0]
    if u2.shape[0] != n:
        raise ValueError("u1 and u2 must have equal length")
    first = np.empty(n, dtype=np.int64)
    second = np.empty(n, dtype=np.int64)
    cdef long long[::1] a = first
    cdef long long[::1] b = second
    cdef Py_ssize_t i, w
    with nogil:
        for i in range(n):
            w = _search(outer_cdf, u1[i])
            a[i] = w
            b[i] = _search(row_cdfs[w], u2[i])
    return first, second
