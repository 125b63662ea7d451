# distutils: language = c++
"""Compiled Brillouin-zone sweep kernels for the separable (free) fiber.

Signatures and results match :mod:`latticebands._kernels_py` exactly.
"""

import numpy as np

from libc.math cimport fabs, INFINITY


cdef double* _merge_runs(double* src, double* dst, Py_ssize_t n, Py_ssize_t run) noexcept nogil:
    """Bottom-up merge of consecutive sorted runs of length ``run``; returns the sorted buffer."""
    cdef Py_ssize_t width = run, lo, mid, hi, i, j, o
    cdef double* tmp
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = mid + width
            if hi > n:
                hi = n
            i, j, o = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[o] = src[j]
                    j += 1
                else:
                    dst[o] = src[i]
                    i += 1
                o += 1
            while i < mid:
                dst[o] = src[i]
                i += 1
                o += 1
            while j < hi:
                dst[o] = src[j]
                j += 1
                o += 1
            lo = hi
        tmp = src
        src = dst
        dst = tmp
        width *= 2
    return src


def separable_band_extrema(const double[:, ::1] a, const double[:, ::1] b):
    """Per-band min/max of sorted ``a[i, s] + b[k, t]`` over all grid cells ``(i, k)``.

    Rows of ``a`` and ``b`` must be sorted ascending, so each cell's sums form
    sorted runs that are merged rather than sorted from scratch.
    """
    if a.shape[1] > b.shape[1]:
        # fewer, longer runs merge faster; the extrema do not depend on the order
        a, b = b, a
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef Py_ssize_t p = a.shape[1], q = b.shape[1]
    cdef Py_ssize_t n = p * q
    cdef Py_ssize_t i, k, s, t, j, idx
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    buf = np.empty(max(n, 1))
    spare = np.empty(max(n, 1))
    cdef double[::1] lo_v = lo
    cdef double[::1] hi_v = hi
    cdef double[::1] buf_v = buf
    cdef double[::1] spare_v = spare
    cdef double* bp = &buf_v[0]
    cdef double* sp = &spare_v[0]
    cdef double* out
    cdef double x
    with nogil:
        for i in range(na):
            for k in range(nb):
                idx = 0
                for s in range(p):
                    x = a[i, s]
                    for t in range(q):
                        bp[idx] = x + b[k, t]
                        idx += 1
                out = _merge_runs(bp, sp, n, q)
                for j in range(n):
                    if out[j] < lo_v[j]:
                        lo_v[j] = out[j]
                    if out[j] > hi_v[j]:
                        hi_v[j] = out[j]
    return lo, hi


def separable_count_grid(const double[:, ::1] a, const double[:, ::1] b, double energy):
    """Strict counts ``#{(s, t): a[i, s] + b[k, t] < energy}`` and distances to ``energy``.

    Rows of ``a`` and ``b`` must be sorted ascending.
    """
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef Py_ssize_t p = a.shape[1], q = b.shape[1]
    cdef Py_ssize_t i, k, s, ptr
    cdef long long total
    cdef double best, d, x
    counts = np.empty((na, nb), dtype=np.int64)
    margins = np.empty((na, nb))
    cdef long long[:, ::1] c_v = counts
    cdef double[:, ::1] m_v = margins
    with nogil:
        for i in range(na):
            for k in range(nb):
                total = 0
                best = INFINITY
                ptr = q
                for s in range(p):
                    x = a[i, s]
                    while ptr > 0 and x + b[k, ptr - 1] >= energy:
                        ptr -= 1
                    total += ptr
                    if ptr > 0:
                        d = fabs(x + b[k, ptr - 1] - energy)
                        if d < best:
                            best = d
                    if ptr < q:
                        d = fabs(x + b[k, ptr] - energy)
                        if d < best:
                            best = d
                c_v[i, k] = total
                m_v[i, k] = best
    return counts, margins
