# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the lattice hot loops in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def wigner_lag_fold_pure(const double complex[::1] psi2, Py_ssize_t n):
    cdef Py_ssize_t size = psi2.shape[0]
    cdef Py_ssize_t k, m, i1, i2, r
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] c = out
    cdef double complex a, b
    with nogil:
        for k in range(n):
            for m in range(-n, n):
                i1 = 2 * k - m
                i2 = 2 * k + m
                if i1 < 0 or i1 >= size or i2 < 0 or i2 >= size:
                    continue
                a = psi2[i1]
                b = psi2[i2]
                r = m + n if m < 0 else m
                c[k, r] = c[k, r] + a * b.conjugate()
    return out


def wigner_lag_fold_density(const double complex[:, ::1] rho2, Py_ssize_t n):
    cdef Py_ssize_t size = rho2.shape[0]
    cdef Py_ssize_t k, m, i1, i2, r
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] c = out
    with nogil:
        for k in range(n):
            for m in range(-n, n):
                i1 = 2 * k - m
                i2 = 2 * k + m
                if i1 < 0 or i1 >= size or i2 < 0 or i2 >= size:
                    continue
                r = m + n if m < 0 else m
                c[k, r] = c[k, r] + rho2[i1, i2]
    return out


def direct_lag_sums(const double complex[:, ::1] rho_eps, const double complex[::1] psi, Py_ssize_t s0):
    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t na = rho_eps.shape[0]
    cdef Py_ssize_t i, j, jj, a1, a2, d, r
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] acc = out
    cdef double complex pj, term
    with nogil:
        for i in range(n):
            for j in range(n):
                a1 = i - j + s0
                if a1 < 0 or a1 >= na:
                    continue
                pj = psi[j]
                if pj == 0:
                    continue
                for jj in range(n):
                    a2 = i - jj + s0
                    if a2 < 0 or a2 >= na:
                        continue
                    d = jj - j
                    r = d + n if d < 0 else d
                    term = rho_eps[a1, a2] * pj * psi[jj].conjugate()
                    acc[i, r] = acc[i, r] + term
    return out
