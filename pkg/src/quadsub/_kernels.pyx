# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot loops; see ``_kernels_py`` for the reference code."""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, exp, fabs, sqrt, M_PI

cnp.import_array()


cdef void _rhs(double[:, ::1] G, const double[:, ::1] Q, const double[:, ::1] F,
               double[:, ::1] FG, double[:, ::1] tmp, double[:, ::1] out,
               Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, j, k, n = m // 2
    cdef double s
    # FG = J^{-1} G: top rows <- bottom rows of G, bottom rows <- -top rows
    for i in range(n):
        for j in range(m):
            FG[i, j] = G[n + i, j]
            FG[n + i, j] = -G[i, j]
    # tmp = Q FG
    for i in range(m):
        for j in range(m):
            s = 0.0
            for k in range(m):
                s += Q[i, k] * FG[k, j]
            tmp[i, j] = s
    for i in range(m):
        for j in range(m):
            s = Q[i, j]
            for k in range(m):
                s += 2.0 * (G[i, k] * F[k, j] + F[k, i] * G[k, j])
                s -= 4.0 * FG[k, i] * tmp[k, j]
            out[i, j] = s


def riccati_rk4(Q_re, F_im, times, double h, double blowup):
    cdef const double[:, ::1] Q = np.ascontiguousarray(Q_re, dtype=np.float64)
    cdef const double[:, ::1] F = np.ascontiguousarray(F_im, dtype=np.float64)
    cdef const double[::1] ts = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t m = Q.shape[0]
    cdef Py_ssize_t nt = ts.shape[0]
    out_arr = np.zeros((nt, m, m))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] G = np.zeros((m, m))
    cdef double[:, ::1] W = np.zeros((m, m))
    cdef double[:, ::1] k1 = np.zeros((m, m))
    cdef double[:, ::1] k2 = np.zeros((m, m))
    cdef double[:, ::1] k3 = np.zeros((m, m))
    cdef double[:, ::1] k4 = np.zeros((m, m))
    cdef double[:, ::1] FG = np.zeros((m, m))
    cdef double[:, ::1] tmp = np.zeros((m, m))
    cdef double t = 0.0, span, dt, v
    cdef Py_ssize_t idx, step, steps, i, j
    cdef bint bad
    with nogil:
        for idx in range(nt):
            span = ts[idx] - t
            steps = <Py_ssize_t>ceil(span / h - 1e-12) if span > 0 else 0
            if steps > 0:
                dt = span / steps
                for step in range(steps):
                    _rhs(G, Q, F, FG, tmp, k1, m)
                    for i in range(m):
                        for j in range(m):
                            W[i, j] = G[i, j] + 0.5 * dt * k1[i, j]
                    _rhs(W, Q, F, FG, tmp, k2, m)
                    for i in range(m):
                        for j in range(m):
                            W[i, j] = G[i, j] + 0.5 * dt * k2[i, j]
                    _rhs(W, Q, F, FG, tmp, k3, m)
                    for i in range(m):
                        for j in range(m):
                            W[i, j] = G[i, j] + dt * k3[i, j]
                    _rhs(W, Q, F, FG, tmp, k4, m)
                    bad = False
                    for i in range(m):
                        for j in range(m):
                            v = G[i, j] + (dt / 6.0) * (k1[i, j] + 2.0 * k2[i, j]
                                                        + 2.0 * k3[i, j] + k4[i, j])
                            G[i, j] = v
                            if not fabs(v) <= blowup:
                                bad = True
                    if bad:
                        with gil:
                            return out_arr, idx
            t = ts[idx]
            for i in range(m):
                for j in range(m):
                    out[idx, i, j] = G[i, j]
    return out_arr, nt


def hermite_functions(x, Py_ssize_t nmax):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t npts = xs.shape[0]
    out_arr = np.zeros((nmax + 1, npts))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, p
    cdef double c0 = M_PI ** -0.25, a, b
    with nogil:
        for p in range(npts):
            out[0, p] = c0 * exp(-0.5 * xs[p] * xs[p])
            if nmax >= 1:
                out[1, p] = sqrt(2.0) * xs[p] * out[0, p]
        for k in range(1, nmax):
            a = sqrt(2.0 / (k + 1))
            b = sqrt(<double>k / (k + 1))
            for p in range(npts):
                out[k + 1, p] = a * xs[p] * out[k, p] - b * out[k - 1, p]
    return out_arr
