# cython: language_level=3
"""Compiled inner loops. Same signatures as ``_kernels_py``."""
import numpy as np

cimport cython
from libc.math cimport lgamma, exp, cos, sin, sqrt, M_PI


cdef inline double _lf(int n) nogil:
    return lgamma(n + 1.0)


def small_d(int ell, double beta):
    cdef int dim = 2 * ell + 1
    out = np.zeros((dim, dim), dtype=np.float64)
    cdef double[:, ::1] d = out
    cdef double c = cos(0.5 * beta)
    cdef double s = sin(0.5 * beta)
    cdef int mp, m, k, kmin, kmax, pc, ps
    cdef double pref, term, acc
    with nogil:
        for mp in range(-ell, ell + 1):
            for m in range(-ell, ell + 1):
                pref = 0.5 * (_lf(ell + mp) + _lf(ell - mp) + _lf(ell + m) + _lf(ell - m))
                kmin = 0 if m - mp < 0 else m - mp
                kmax = ell + m if ell + m < ell - mp else ell - mp
                acc = 0.0
                for k in range(kmin, kmax + 1):
                    term = exp(pref - _lf(ell + m - k) - _lf(k) - _lf(mp - m + k) - _lf(ell - mp - k))
                    pc = 2 * ell + m - mp - 2 * k
                    ps = mp - m + 2 * k
                    term *= (c ** pc) * (s ** ps)
                    if (mp - m + k) & 1:
                        term = -term
                    acc += term
                d[mp + ell, m + ell] = acc
    return out


def orbit_forcing(const double complex[::1] alphas, const double complex[:, ::1] W,
                  const double complex[:, ::1] G):
    cdef Py_ssize_t L = G.shape[0], dim = G.shape[1]
    cdef Py_ssize_t r, i, k
    acc_arr = np.array(np.asarray(G)[L - 1], dtype=np.complex128)
    tmp_arr = np.empty(dim, dtype=np.complex128)
    cdef double complex[::1] acc = acc_arr
    cdef double complex[::1] tmp = tmp_arr
    cdef double complex v
    with nogil:
        for r in range(L - 2, -1, -1):
            for i in range(dim):
                v = 0
                for k in range(dim):
                    v = v + W[i, k] * acc[k]
                tmp[i] = G[r, i] + alphas[r] * v
            for i in range(dim):
                acc[i] = tmp[i]
    return acc_arr


def orbit_recursion(const double complex[::1] F0, const double complex[::1] alphas,
                    const double complex[:, ::1] W, const double complex[:, ::1] G):
    cdef Py_ssize_t L = G.shape[0], dim = G.shape[1]
    cdef Py_ssize_t j, i, k
    out_arr = np.empty((L + 1, dim), dtype=np.complex128)
    cdef double complex[:, ::1] F = out_arr
    cdef double complex v, a
    with nogil:
        for i in range(dim):
            F[0, i] = F0[i]
        for j in range(L):
            a = alphas[j].conjugate()
            for i in range(dim):
                v = 0
                for k in range(dim):
                    v = v + W[k, i].conjugate() * (F[j, k] + G[j, k])
                F[j + 1, i] = a * v
    return out_arr


def series_sum(const double complex[:, ::1] coeffs, const long[:, ::1] ks, const long[::1] ncol,
               const double[:, ::1] xs, const double complex[:, :, ::1] dmats):
    cdef Py_ssize_t B = coeffs.shape[0], dim = coeffs.shape[1], P = xs.shape[0]
    cdef Py_ssize_t p, b, m
    out_arr = np.zeros(P, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex inner, acc
    cdef double ang
    with nogil:
        for p in range(P):
            acc = 0
            for b in range(B):
                inner = 0
                for m in range(dim):
                    inner = inner + coeffs[b, m] * dmats[p, m, ncol[b]]
                ang = 2.0 * M_PI * (ks[b, 0] * xs[p, 0] + ks[b, 1] * xs[p, 1] + ks[b, 2] * xs[p, 2])
                acc = acc + inner * (cos(ang) + 1j * sin(ang))
            out[p] = acc
    return out_arr
