"""Pure-Python inverse-CDF sampling loops (reference for the compiled core).

Index ``i`` is drawn for uniform ``u`` when ``cdf[i-1] <= u < cdf[i]``, so
zero-mass points are never selected.
"""

from bisect import bisect_right

import numpy as np


def _search(cdf, u):
    i = bisect_right(cdf, u)
    return i if i < len(cdf) else len(cdf) - 1


def inverse_cdf(cdf, u):
    cdf = list(cdf)
    return np.array([_search(cdf, x) for x in u], dtype=np.int64)


def two_stage(outer_cdf, row_cdfs, u1, u2):
    if len(u1) != len(u2):
        raise ValueError("u1 and u2 must have equal length")
    outer = list(outer_cdf)
    rows = [list(r) for r in row_cdfs]
    first = np.empty(len(u1), dtype=np.int64)
    second = np.empty(len(u1), dtype=np.int64)
    for i, (a, b) in enumerate(zip(u1, u2)):
        w = _search(outer, a)
        first[i] = w
        second[i] = _search(rows[w], b)
    return first, second
