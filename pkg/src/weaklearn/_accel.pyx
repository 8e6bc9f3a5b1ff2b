# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled median-regression SGD inner loop (see _accel_np for semantics)."""

import numpy as np

cimport numpy as cnp

BACKEND = "cython"


def median_sgd_run(
    double[:, ::1] a,
    double[:, ::1] kxs,
    double[:, ::1] ys,
    double[:, ::1] us,
    double[::1] gammas,
    double lam_reg,
    double[:, ::1] Kpp,
    double[:, ::1] avg_out,
):
    cdef Py_ssize_t T = kxs.shape[0]
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t t, i, j, k
    cdef double inner, eps, g, fj, acc
    cdef bint use_ridge = lam_reg > 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] eps_out = np.empty(T)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ka = np.empty((p, m))
    cdef double[::1] f_v = f
    cdef double[:, ::1] ka_v = ka

    for t in range(T):
        inner = 0.0
        for j in range(m):
            fj = 0.0
            for i in range(p):
                fj += kxs[t, i] * a[i, j]
            f_v[j] = fj
            inner += (ys[t, j] - fj) * us[t, j]
        eps = 1.0 if inner >= 0.0 else -1.0
        eps_out[t] = eps
        g = gammas[t]
        for i in range(p):
            for j in range(m):
                a[i, j] += g * eps * kxs[t, i] * us[t, j]
        if use_ridge:
            for i in range(p):
                for j in range(m):
                    acc = 0.0
                    for k in range(p):
                        acc += Kpp[i, k] * a[k, j]
                    ka_v[i, j] = acc
            for i in range(p):
                for j in range(m):
                    a[i, j] -= g * lam_reg * 2.0 * ka_v[i, j]
        for i in range(p):
            for j in range(m):
                avg_out[i, j] += a[i, j]
    return eps_out
