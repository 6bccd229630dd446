# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_pykernels`` for the reference versions."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _count_value(double a0, double a1, double a00, double a01, double a11,
                                long n, long n1, long n2, long n3, long n4) nogil:
    cdef long s0 = n1 + n2 - n3 - n4
    cdef long s1 = n1 - n2 + n3 - n4
    cdef long t = n1 - n2 - n3 + n4
    return (a0 * s0 + a1 * s1 + a00 * (s0 * s0 - n) + a01 * (s0 * s1 - t)
            + a11 * (s1 * s1 - n))


def count_minimum(double a0, double a1, double a00, double a01, double a11, long n,
                  double rel_tol=1e-12):
    """Minimum over strategy counts; ties go to the lexicographically smallest tuple."""
    cdef long n1, n2, n3
    cdef double v, best = 1e308, thresh
    with nogil:
        for n1 in range(n + 1):
            for n2 in range(n - n1 + 1):
                for n3 in range(n - n1 - n2 + 1):
                    v = _count_value(a0, a1, a00, a01, a11, n, n1, n2, n3, n - n1 - n2 - n3)
                    if v < best:
                        best = v
    thresh = best + rel_tol * (1.0 if best > -1.0 and best < 1.0 else (best if best > 0 else -best))
    for n1 in range(n + 1):
        for n2 in range(n - n1 + 1):
            for n3 in range(n - n1 - n2 + 1):
                v = _count_value(a0, a1, a00, a01, a11, n, n1, n2, n3, n - n1 - n2 - n3)
                if v <= thresh:
                    return best, (n1, n2, n3, n - n1 - n2 - n3)
    return best, (n, 0, 0, 0)


def dicke_moments(const double[::1] psi, const double[::1] x, const double[::1] z):
    """``<Jx>, <Jz>, <Jx^2>, <Jz^2>, <{Jx,Jz}>`` for a real vector in a spin block.

    ``x`` holds the off-diagonal of ``Jx`` and ``z`` the diagonal of ``Jz``.
    """
    cdef Py_ssize_t d = psi.shape[0], i
    cdef double jx = 0, jz = 0, jxx = 0, jzz = 0, jxz = 0, p, xl, xr, c
    for i in range(d):
        p = psi[i] * psi[i]
        xl = x[i - 1] if i > 0 else 0.0
        xr = x[i] if i < d - 1 else 0.0
        jz += z[i] * p
        jzz += z[i] * z[i] * p
        jxx += (xl * xl + xr * xr) * p
        if i < d - 1:
            c = psi[i] * psi[i + 1] * x[i]
            jx += 2.0 * c
            jxz += 2.0 * c * (z[i] + z[i + 1])
        if i < d - 2:
            jxx += 2.0 * psi[i] * psi[i + 2] * x[i] * x[i + 1]
    return jx, jz, jxx, jzz, jxz
