# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping loop of the delay integrator."""
from libc.math cimport isfinite


def advance(double[::1] X, const Py_ssize_t[:, ::1] J, const double[:, ::1] F,
            const double[:, ::1] W, Py_ssize_t m):
    """Fill ``X[m + 1:]`` step by step; return the failing step or -1.

    Row ``n`` of ``J``/``F``/``W`` holds, for both Gauss nodes of step ``n``,
    the interpolation cell, the fraction inside it and ``c(u) * dt / 2``.
    A cell index equal to the current point means the delayed argument lies
    inside the step being computed.
    """
    cdef Py_ssize_t N = J.shape[0]
    cdef Py_ssize_t n, k, i, j, sweep, sweeps
    cdef double xn, guess, acc, xv, f
    for n in range(N):
        k = m + n
        xn = X[k]
        guess = xn
        sweeps = 2 if (J[n, 0] >= k or J[n, 1] >= k) else 1
        for sweep in range(sweeps):
            acc = 0.0
            for i in range(2):
                j = J[n, i]
                f = F[n, i]
                if j < k:
                    xv = X[j] + f * (X[j + 1] - X[j])
                else:
                    xv = xn + f * (guess - xn)
                acc += W[n, i] * xv
            guess = xn - acc
        if not isfinite(guess):
            return n
        X[k + 1] = guess
    return -1
