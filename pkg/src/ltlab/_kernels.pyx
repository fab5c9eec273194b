# cython: language_level=3
"""Compiled versions of the hot kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow

cnp.import_array()


cdef inline double ipow(double x, int k) nogil:
    cdef double r = 1.0
    while k > 0:
        if k & 1:
            r *= x
        x *= x
        k >>= 1
    return r


def vec_gap_batch(double[:, ::1] a, double[:, ::1] b, int n_exp, bint improved):
    cdef Py_ssize_t n = a.shape[0], d = a.shape[1], i, j
    cdef double lam = ipow(2.0, n_exp - 1) - 1.0
    cdef double c_imp = 1.0 / (lam * ipow(2.0, n_exp - 2))
    cdef double na2, nb2, nd2, ab, diff, na, na_pow, extra
    out = np.empty(n)
    cdef double[::1] res = out
    with nogil:
        for i in range(n):
            na2 = 0.0
            nb2 = 0.0
            nd2 = 0.0
            ab = 0.0
            for j in range(d):
                na2 += a[i, j] * a[i, j]
                nb2 += b[i, j] * b[i, j]
                ab += a[i, j] * b[i, j]
                diff = b[i, j] - a[i, j]
                nd2 += diff * diff
            na = sqrt(na2)
            na_pow = ipow(na, n_exp - 2)
            if improved:
                extra = na_pow * nb2 * c_imp
            else:
                extra = ipow(sqrt(nb2), n_exp) / lam
            res[i] = ipow(sqrt(nd2), n_exp) - na_pow * na2 - extra + n_exp * na_pow * ab
    return out


def scalar_pow_gaps(double[::1] k, double[::1] l, double[::1] q):
    cdef Py_ssize_t n = k.shape[0], i
    cdef double sq, pk
    sup = np.empty(n)
    sub = np.empty(n)
    cdef double[::1] rs = sup
    cdef double[::1] rb = sub
    for i in range(n):
        sq = pow(k[i] + l[i], q[i])
        pk = pow(k[i], q[i]) + pow(l[i], q[i])
        rs[i] = sq - pk
        rb[i] = pk - pow(2.0, 1.0 - q[i]) * sq
    return sup, sub


def legendre_table(int lmax, x_in):
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=float).ravel()
    cdef Py_ssize_t npts = x.shape[0], i
    cdef int l, m
    p_arr = np.zeros((lmax + 1, lmax + 1, npts))
    dp_arr = np.zeros((lmax + 1, lmax + 1, npts))
    u_arr = np.empty(npts)
    cdef double[:, :, ::1] p = p_arr
    cdef double[:, :, ::1] dp = dp_arr
    cdef double[::1] u = u_arr
    cdef double fac, a, b, c
    # sample index innermost: rows of p are contiguous
    for i in range(npts):
        u[i] = sqrt((1.0 - x[i]) * (1.0 + x[i]))
        p[0, 0, i] = 1.0
    for m in range(1, lmax + 1):
        fac = sqrt(3.0) if m == 1 else sqrt((2.0 * m + 1.0) / (2.0 * m))
        for i in range(npts):
            p[m, m, i] = fac * u[i] * p[m - 1, m - 1, i]
    for m in range(0, lmax):
        fac = sqrt(2.0 * m + 3.0)
        for i in range(npts):
            p[m + 1, m, i] = fac * x[i] * p[m, m, i]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / ((l - m) * (l + m)))
            b = sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0)
                     / ((l - m) * (l + m) * (2.0 * l - 3.0)))
            for i in range(npts):
                p[l, m, i] = a * x[i] * p[l - 1, m, i] - b * p[l - 2, m, i]
    for l in range(1, lmax + 1):
        for m in range(0, l + 1):
            c = sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0))
            if m <= l - 1:
                for i in range(npts):
                    dp[l, m, i] = (l * x[i] * p[l, m, i] - c * p[l - 1, m, i]) / u[i]
            else:
                for i in range(npts):
                    dp[l, m, i] = l * x[i] * p[l, m, i] / u[i]
    return p_arr, dp_arr
