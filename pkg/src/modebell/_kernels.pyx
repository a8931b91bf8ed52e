# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
from libc.math cimport cos, sin


def outcome_probabilities(coef, weights, theta_a, theta_b):
    cdef double complex[:, :, :, ::1] c = np.ascontiguousarray(coef, dtype=np.complex128)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] ta = np.ascontiguousarray(np.atleast_1d(theta_a), dtype=np.float64)
    cdef double[::1] tb = np.ascontiguousarray(np.atleast_1d(theta_b), dtype=np.float64)
    cdef Py_ssize_t nb = c.shape[0], no = c.shape[1], ka = c.shape[2], kb = c.shape[3]
    cdef Py_ssize_t n_pairs = ta.shape[0]
    if tb.shape[0] != n_pairs:
        raise ValueError("theta_a and theta_b must have equal length")
    if w.shape[0] != nb:
        raise ValueError("one weight per branch required")

    out = np.zeros((n_pairs, no), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef double complex[::1] pa = np.empty(ka, dtype=np.complex128)
    cdef double complex[::1] pb = np.empty(kb, dtype=np.complex128)
    pab_buf = np.empty(ka * kb, dtype=np.complex128)
    cdef double complex[::1] pab = pab_buf
    cdef Py_ssize_t n, o, b, k, l
    cdef double complex amp
    cdef double acc

    with nogil:
        for n in range(n_pairs):
            for k in range(ka):
                pa[k] = cos(k * ta[n]) + 1j * sin(k * ta[n])
            for l in range(kb):
                pb[l] = cos(l * tb[n]) + 1j * sin(l * tb[n])
            for k in range(ka):
                for l in range(kb):
                    pab[k * kb + l] = pa[k] * pb[l]
            for o in range(no):
                acc = 0.0
                for b in range(nb):
                    amp = 0.0
                    for k in range(ka):
                        for l in range(kb):
                            amp = amp + c[b, o, k, l] * pab[k * kb + l]
                    acc = acc + w[b] * (amp.real * amp.real + amp.imag * amp.imag)
                res[n, o] = acc
    return out


def inverse_cdf_counts(cdf, uniforms):
    cdef double[::1] f = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef double[::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t m = f.shape[0], n = u.shape[0], i, lo, hi, mid
    counts = np.zeros(m, dtype=np.int64)
    cdef long long[::1] cnt = counts
    cdef double x
    with nogil:
        for i in range(n):
            x = u[i]
            # first index with f[idx] > x
            lo = 0
            hi = m
            while lo < hi:
                mid = (lo + hi) >> 1
                if f[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            if lo > m - 1:
                lo = m - 1
            cnt[lo] += 1
    return counts
