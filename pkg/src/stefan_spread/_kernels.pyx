# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels.  Same signatures as ``_kernels_py``."""

from libc.math cimport isfinite


cdef inline void _thomas(double* x, const double* rhs, double r,
                         const double* cp, const double* dinv, int n) noexcept nogil:
    # constant-coefficient (1+2r, -r) tridiagonal, prefactored; x may alias rhs
    cdef int i
    x[0] = rhs[0] * dinv[0]
    for i in range(1, n):
        x[i] = (rhs[i] + r * x[i - 1]) * dinv[i]
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


cdef int _spde_step(double* v, const double* w, double cfl, const double* f,
                    double v_right, double w_right, double r,
                    const double* cp, const double* dinv, int n, bint reflect,
                    double* eta) noexcept nogil:
    cdef int i
    cdef double wl, wr, d
    for i in range(n):
        wl = w[i - 1] if i > 0 else 0.0
        wr = w[i + 1] if i < n - 1 else w_right
        if cfl > 0.0:
            d = wr - w[i]
        else:
            d = w[i] - wl
        eta[i] = v[i] + cfl * d + f[i]
    eta[n - 1] += r * v_right
    _thomas(v, eta, r, cp, dinv, n)
    for i in range(n):
        if not isfinite(v[i]):
            return 0
    if reflect:
        for i in range(n):
            if v[i] < 0.0:
                eta[i] = -v[i]
                v[i] = 0.0
            else:
                eta[i] = 0.0
    else:
        for i in range(n):
            eta[i] = 0.0
    return 1


def spde_step(double[::1] v, const double[::1] w, double cfl, const double[::1] forcing,
              double v_right, double w_right, fac, bint reflect, double[::1] eta_inc):
    cdef const double[::1] cp = fac.cprime
    cdef const double[::1] dinv = fac.dinv
    cdef double r = fac.r
    cdef int n = v.shape[0]
    cdef int ok
    with nogil:
        ok = _spde_step(&v[0], &w[0], cfl, &forcing[0], v_right, w_right, r,
                        &cp[0], &dinv[0], n, reflect, &eta_inc[0])
    return ok == 1


def heat_solve(double[::1] x, fac):
    cdef const double[::1] cp = fac.cprime
    cdef const double[::1] dinv = fac.dinv
    cdef double r = fac.r
    with nogil:
        _thomas(&x[0], &x[0], r, &cp[0], &dinv[0], x.shape[0])


def obstacle_step(double[::1] O, const double[::1] lower, fac, double[::1] eta_out):
    cdef const double[::1] cp = fac.cprime
    cdef const double[::1] dinv = fac.dinv
    cdef double r = fac.r
    cdef int n = O.shape[0]
    cdef int i
    with nogil:
        _thomas(&O[0], &O[0], r, &cp[0], &dinv[0], n)
        for i in range(n):
            if O[i] < lower[i]:
                eta_out[i] = lower[i] - O[i]
                O[i] = lower[i]
            else:
                eta_out[i] = 0.0
