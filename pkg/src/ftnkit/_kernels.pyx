# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics must match ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

TIE_EPS = 1e-12


def nearest_index(const double complex[::1] symbols, const double complex[::1] points):
    """Index of the closest constellation point for every symbol.

    Near-ties (within ``TIE_EPS`` of the best squared distance) resolve to the
    lowest index, which is the lowest bit pattern for label-ordered tables.
    """
    cdef Py_ssize_t n = symbols.shape[0]
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t i, k, best_k
    cdef double re, im, dr, di, d, best
    cdef double eps = TIE_EPS
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] out_v = out
    cdef double[::1] pr = np.ascontiguousarray(np.real(np.asarray(points)), dtype=np.float64)
    cdef double[::1] pi = np.ascontiguousarray(np.imag(np.asarray(points)), dtype=np.float64)
    with nogil:
        for i in range(n):
            re = symbols[i].real
            im = symbols[i].imag
            best = 1e300
            for k in range(m):
                dr = re - pr[k]
                di = im - pi[k]
                d = dr * dr + di * di
                if d < best:
                    best = d
            best = best + eps
            best_k = 0
            for k in range(m):
                dr = re - pr[k]
                di = im - pi[k]
                if dr * dr + di * di < best:
                    best_k = k
                    break
            out_v[i] = best_k
    return out


def waterfill_cutoff(const double[::1] sorted_snrs, double budget):
    """Scan ascending positive SNRs for the water-filling cut index.

    Returns ``(cut, threshold)`` where carriers ``cut..`` are active and
    ``threshold`` is the cutoff SNR. ``budget`` is the total power.
    """
    cdef Py_ssize_t n = sorted_snrs.shape[0]
    cdef Py_ssize_t i
    cdef double tail = 0.0
    cdef double prev, thr
    cdef double[::1] suffix = np.empty(n + 1, dtype=np.float64)
    suffix[n] = 0.0
    for i in range(n - 1, -1, -1):
        tail += 1.0 / sorted_snrs[i]
        suffix[i] = tail
    thr = 0.0
    for i in range(n):
        thr = (n - i) / (budget + suffix[i])
        prev = sorted_snrs[i - 1] if i > 0 else 0.0
        if prev <= thr < sorted_snrs[i]:
            return i, thr
    return n - 1, thr
