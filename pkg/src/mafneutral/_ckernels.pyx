# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch statistic kernels.

Mirrors ``_pykernels`` exactly. The per-table loop runs without the GIL so
simulation blocks can be evaluated from several threads at once.
"""

import numpy as np

from libc.math cimport sqrt, fabs, NAN, isnan

# keep in sync with _pykernels
cdef enum:
    W = 0
    T = 1
    CHI2 = 2
    CATT = 3
    W_HWD = 4
    T_HWD = 5


cdef inline double _stat(int code, double param, double r0, double r1, double R,
                         double s0, double s1, double S) noexcept nogil:
    cdef double N = R + S
    cdef double lam = R / N
    cdef double qa = (2.0 * r0 + r1) / (2.0 * R)
    cdef double qu = (2.0 * s0 + s1) / (2.0 * S)
    cdef double var, qd, q11d, va, vu
    cdef double a, b, c, d, margins
    cdef double u, sx, sxx, n1, n2

    if code == W or code == W_HWD:
        qd = param * qa + (1.0 - param) * qu
        var = qd * (1.0 - qd)
        if code == W_HWD:
            q11d = param * (r0 / R) + (1.0 - param) * (s0 / S)
            var = var + (q11d - qd * qd)
    elif code == T:
        var = lam * qu * (1.0 - qu) + (1.0 - lam) * qa * (1.0 - qa)
    elif code == T_HWD:
        va = qa * (1.0 - qa) + r0 / R - qa * qa
        vu = qu * (1.0 - qu) + s0 / S - qu * qu
        var = lam * vu + (1.0 - lam) * va
    elif code == CHI2:
        a = 2.0 * r0 + r1
        b = 2.0 * R - a
        c = 2.0 * s0 + s1
        d = 2.0 * S - c
        margins = (a + b) * (c + d) * (a + c) * (b + d)
        if margins > 0.0:
            return 2.0 * N * (a * d - b * c) * (a * d - b * c) / margins
        return NAN
    elif code == CATT:
        n1 = r1 + s1
        n2 = r0 + s0
        u = param * (R * s1 - S * r1) + (R * s0 - S * r0)
        sx = param * n1 + n2
        sxx = param * param * n1 + n2
        var = R * S * (sxx - sx * sx / N)
        if var > 0.0:
            return u / sqrt(var)
        return NAN
    else:
        return NAN

    if var > 0.0:
        return sqrt(2.0 * R * S / N) * (qu - qa) / sqrt(var)
    return NAN


def batch_statistics(const long long[::1] r0, const long long[::1] r1, const long long[::1] R,
                     const long long[::1] s0, const long long[::1] s1, const long long[::1] S,
                     const long long[::1] codes, const double[::1] params):
    cdef Py_ssize_t n = r0.shape[0]
    cdef Py_ssize_t k = codes.shape[0]
    cdef Py_ssize_t i, j
    out_arr = np.empty((k, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            for j in range(k):
                out[j, i] = _stat(<int>codes[j], params[j], <double>r0[i], <double>r1[i], <double>R[i],
                                  <double>s0[i], <double>s1[i], <double>S[i])
    return out_arr


def count_rejections(const long long[::1] r0, const long long[::1] r1, const long long[::1] R,
                     const long long[::1] s0, const long long[::1] s1, const long long[::1] S,
                     const long long[::1] codes, const double[::1] params, const double[::1] crit):
    cdef Py_ssize_t n = r0.shape[0]
    cdef Py_ssize_t k = codes.shape[0]
    cdef Py_ssize_t i, j
    cdef double value
    rej_arr = np.zeros(k, dtype=np.int64)
    def_arr = np.zeros(k, dtype=np.int64)
    cdef long long[::1] rej = rej_arr
    cdef long long[::1] dfd = def_arr
    with nogil:
        for i in range(n):
            for j in range(k):
                value = _stat(<int>codes[j], params[j], <double>r0[i], <double>r1[i], <double>R[i],
                              <double>s0[i], <double>s1[i], <double>S[i])
                if isnan(value):
                    continue
                dfd[j] += 1
                if codes[j] != CHI2:
                    value = fabs(value)
                if value > crit[j]:
                    rej[j] += 1
    return rej_arr, def_arr
