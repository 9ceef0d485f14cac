# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for sampling and bootstrap resampling.

The pure-Python twins live in ``_fallback.py``; both modules expose the same
functions and must stay behaviorally interchangeable (integer results are
bit-identical, float accumulations may differ in the last ulp because the
fallback sums pairwise).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def shuffle_draw(cnp.int64_t[::1] pool, cnp.int64_t[::1] js, Py_ssize_t start):
    """Apply partial Fisher-Yates swaps to ``pool`` in place.

    ``js[i]`` must lie in ``[start + i, len(pool))``; after the call,
    ``pool[start:start + len(js)]`` is a uniform without-replacement draw
    from the suffix ``pool[start:]``.
    """
    cdef Py_ssize_t i, j, a, m = js.shape[0]
    cdef cnp.int64_t tmp
    for i in range(m):
        a = start + i
        j = js[i]
        tmp = pool[a]
        pool[a] = pool[j]
        pool[j] = tmp


def resample_stratum(
    double[::1] values,
    cnp.uint8_t[::1] matched,
    cnp.int64_t[:, ::1] idx,
    double[::1] counts_out,
    double[::1] sums_out,
):
    """Per-trial positive counts and positive-value sums for one stratum.

    ``idx`` holds with-replacement resample indices, one row per bootstrap
    trial. Writes ``counts_out[b] = sum(matched[idx[b]])`` and
    ``sums_out[b] = sum(values[idx[b]] where matched)``.
    """
    cdef Py_ssize_t b, i, B = idx.shape[0], n = idx.shape[1]
    cdef Py_ssize_t pos
    cdef double cnt, s
    for b in range(B):
        cnt = 0.0
        s = 0.0
        for i in range(n):
            pos = idx[b, i]
            if matched[pos]:
                cnt += 1.0
                s += values[pos]
        counts_out[b] = cnt
        sums_out[b] = s
