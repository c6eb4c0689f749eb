# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Signatures match ``ultrawave._fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY, isfinite, isinf

cnp.import_array()


def assoc_max(log_m, log_rho, bint concave=False):
    cdef const double[::1] lm = np.ascontiguousarray(log_m, dtype=np.float64)
    cdef const double[::1] lr = np.ascontiguousarray(log_rho, dtype=np.float64)
    cdef Py_ssize_t n_p = lm.shape[0], n_r = lr.shape[0]
    cdef Py_ssize_t i, p, best_p, lo, hi, mid
    cdef double r, v, best
    vals_arr = np.empty(n_r, dtype=np.float64)
    arg_arr = np.empty(n_r, dtype=np.int64)
    cdef double[::1] vals = vals_arr
    cdef long long[::1] arg = arg_arr
    with nogil:
        for i in range(n_r):
            r = lr[i]
            if concave:
                # first p whose ratio log(M_{p+1}/M_p) reaches log rho
                lo = 0
                hi = n_p - 1
                while lo < hi:
                    mid = (lo + hi) // 2
                    if lm[mid + 1] - lm[mid] < r:
                        lo = mid + 1
                    else:
                        hi = mid
                vals[i] = lo * r - lm[lo]
                arg[i] = lo
                continue
            best = -lm[0]
            best_p = 0
            for p in range(1, n_p):
                v = p * r - lm[p]
                if v > best:
                    best = v
                    best_p = p
            vals[i] = best
            arg[i] = best_p
    return vals_arr, arg_arr


def m2_profile(log_m):
    cdef const double[::1] lm = np.ascontiguousarray(log_m, dtype=np.float64)
    cdef Py_ssize_t n_p = lm.shape[0], n, p
    cdef double best, v
    g_arr = np.zeros(n_p, dtype=np.float64)
    cdef double[::1] g = g_arr
    with nogil:
        for n in range(1, n_p):
            best = -INFINITY
            for p in range(n + 1):
                v = lm[n] - lm[p] - lm[n - p]
                if v > best:
                    best = v
            g[n] = best
    return g_arr


def ring_profile(log_amp, ring, cone_mask, Py_ssize_t n_rings, double q):
    cdef const double[::1] a = np.ascontiguousarray(log_amp, dtype=np.float64)
    cdef const long long[::1] rg = np.ascontiguousarray(ring, dtype=np.int64)
    cdef const unsigned char[::1] cm = np.ascontiguousarray(cone_mask, dtype=np.uint8)
    cdef Py_ssize_t n = a.shape[0], i, j
    cdef bint use_max = isinf(q)
    prof_arr = np.full(n_rings, -np.inf, dtype=np.float64)
    count_arr = np.zeros(n_rings, dtype=np.int64)
    acc_arr = np.zeros(n_rings, dtype=np.float64)
    cdef double[::1] prof = prof_arr
    cdef long long[::1] count = count_arr
    cdef double[::1] acc = acc_arr
    with nogil:
        for i in range(n):
            j = rg[i]
            if j < 0 or j >= n_rings or not cm[i] or not isfinite(a[i]):
                continue
            count[j] += 1
            if a[i] > prof[j]:
                prof[j] = a[i]
        if not use_max:
            for i in range(n):
                j = rg[i]
                if j < 0 or j >= n_rings or not cm[i] or not isfinite(a[i]):
                    continue
                acc[j] += exp(q * (a[i] - prof[j]))
            for j in range(n_rings):
                if count[j] > 0:
                    prof[j] += log(acc[j]) / q
    return prof_arr, count_arr
