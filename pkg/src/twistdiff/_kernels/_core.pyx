# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Hot-loop kernels for batched trajectory iteration.

Each trajectory is integrated independently with scalar arithmetic, so
results are bit-identical however the batch is partitioned.  The GIL is
released for the whole batch loop, which lets a thread pool run chunks
in parallel.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor

cnp.import_array()

cdef double TWO_PI = 6.283185307179586


cdef inline double _horner(const double* c, Py_ssize_t m, double r) noexcept nogil:
    cdef Py_ssize_t j = m - 1
    cdef double out = c[j]
    while j > 0:
        j -= 1
        out = out * r + c[j]
    return out


cdef inline double _pot(const double* re, const double* im,
                        Py_ssize_t nk, Py_ssize_t m,
                        double theta, double r) noexcept nogil:
    """Evaluate sum over harmonics using the conjugate-symmetric real form."""
    cdef double out = _horner(re, m, r)
    cdef Py_ssize_t k
    cdef double ang, a, b
    for k in range(1, nk):
        a = _horner(re + k * m, m, r)
        b = _horner(im + k * m, m, r)
        ang = TWO_PI * k * theta
        out += 2.0 * (a * cos(ang) - b * sin(ang))
    return out


def run_paths(double[:, ::1] upre, double[:, ::1] upim,
              double[:, ::1] umre, double[:, ::1] umim,
              double[:, ::1] vpre, double[:, ::1] vpim,
              double[:, ::1] vmre, double[:, ::1] vmim,
              double[:, ::1] wpre, double[:, ::1] wpim,
              double[:, ::1] wmre, double[:, ::1] wmim,
              double eps,
              double[::1] theta0, double[::1] r0,
              const signed char[:, ::1] omegas,
              bint record):
    """Iterate a batch of trajectories for a fixed number of steps.

    Returns (theta_final, r_final, r_path or None); r_path has shape
    (M, n+1) including the initial action.
    """
    cdef Py_ssize_t M = theta0.shape[0]
    cdef Py_ssize_t n = omegas.shape[1]
    theta_fin = np.empty(M, dtype=np.float64)
    r_fin = np.empty(M, dtype=np.float64)
    r_path = np.empty((M, n + 1), dtype=np.float64) if record \
        else np.empty((1, 1), dtype=np.float64)
    cdef double[::1] tf = theta_fin
    cdef double[::1] rf = r_fin
    cdef double[:, ::1] rp = r_path

    cdef const double* aupre = &upre[0, 0]
    cdef const double* aupim = &upim[0, 0]
    cdef const double* aumre = &umre[0, 0]
    cdef const double* aumim = &umim[0, 0]
    cdef const double* avpre = &vpre[0, 0]
    cdef const double* avpim = &vpim[0, 0]
    cdef const double* avmre = &vmre[0, 0]
    cdef const double* avmim = &vmim[0, 0]
    cdef const double* awpre = &wpre[0, 0]
    cdef const double* awpim = &wpim[0, 0]
    cdef const double* awmre = &wmre[0, 0]
    cdef const double* awmim = &wmim[0, 0]
    cdef Py_ssize_t nku = upre.shape[0], mu = upre.shape[1]
    cdef Py_ssize_t nkum = umre.shape[0], mum = umre.shape[1]
    cdef Py_ssize_t nkv = vpre.shape[0], mv = vpre.shape[1]
    cdef Py_ssize_t nkvm = vmre.shape[0], mvm = vmre.shape[1]
    cdef Py_ssize_t nkw = wpre.shape[0], mw = wpre.shape[1]
    cdef Py_ssize_t nkwm = wmre.shape[0], mwm = wmre.shape[1]

    cdef Py_ssize_t i, k
    cdef double th, r, uval, vval, wval
    cdef signed char om

    with nogil:
        for i in range(M):
            th = theta0[i]
            r = r0[i]
            if record:
                rp[i, 0] = r
            for k in range(n):
                om = omegas[i, k]
                if om == 1:
                    uval = _pot(aupre, aupim, nku, mu, th, r)
                    vval = _pot(avpre, avpim, nkv, mv, th, r)
                    wval = _pot(awpre, awpim, nkw, mw, th, r)
                else:
                    uval = _pot(aumre, aumim, nkum, mum, th, r)
                    vval = _pot(avmre, avmim, nkvm, mvm, th, r)
                    wval = _pot(awmre, awmim, nkwm, mwm, th, r)
                th = th + r + eps * uval
                th = th - floor(th)
                r = r + eps * vval + eps * eps * wval
                if record:
                    rp[i, k + 1] = r
            tf[i] = th
            rf[i] = r

    return theta_fin, r_fin, (r_path if record else None)


def run_exits(double[:, ::1] upre, double[:, ::1] upim,
              double[:, ::1] umre, double[:, ::1] umim,
              double[:, ::1] vpre, double[:, ::1] vpim,
              double[:, ::1] vmre, double[:, ::1] vmim,
              double[:, ::1] wpre, double[:, ::1] wpim,
              double[:, ::1] wmre, double[:, ::1] wmim,
              double eps,
              double[::1] theta0, double[::1] r0,
              const signed char[:, ::1] omegas,
              double lo, double hi, double close_tol):
    """Iterate until the action is close_tol-close to (or past) lo or hi.

    Returns (exit_idx, side, theta_exit, r_exit); side is -1 for the
    lower boundary, +1 for the upper, 0 if the word was exhausted
    (final-time exit, exit_idx = word length).
    """
    cdef Py_ssize_t M = theta0.shape[0]
    cdef Py_ssize_t n = omegas.shape[1]
    exit_idx = np.empty(M, dtype=np.int64)
    side = np.empty(M, dtype=np.int8)
    theta_exit = np.empty(M, dtype=np.float64)
    r_exit = np.empty(M, dtype=np.float64)
    cdef long long[::1] ei = exit_idx
    cdef signed char[::1] sd = side
    cdef double[::1] te = theta_exit
    cdef double[::1] re_ = r_exit

    cdef const double* aupre = &upre[0, 0]
    cdef const double* aupim = &upim[0, 0]
    cdef const double* aumre = &umre[0, 0]
    cdef const double* aumim = &umim[0, 0]
    cdef const double* avpre = &vpre[0, 0]
    cdef const double* avpim = &vpim[0, 0]
    cdef const double* avmre = &vmre[0, 0]
    cdef const double* avmim = &vmim[0, 0]
    cdef const double* awpre = &wpre[0, 0]
    cdef const double* awpim = &wpim[0, 0]
    cdef const double* awmre = &wmre[0, 0]
    cdef const double* awmim = &wmim[0, 0]
    cdef Py_ssize_t nku = upre.shape[0], mu = upre.shape[1]
    cdef Py_ssize_t nkum = umre.shape[0], mum = umre.shape[1]
    cdef Py_ssize_t nkv = vpre.shape[0], mv = vpre.shape[1]
    cdef Py_ssize_t nkvm = vmre.shape[0], mvm = vmre.shape[1]
    cdef Py_ssize_t nkw = wpre.shape[0], mw = wpre.shape[1]
    cdef Py_ssize_t nkwm = wmre.shape[0], mwm = wmre.shape[1]

    cdef Py_ssize_t i, k
    cdef double th, r, uval, vval, wval
    cdef signed char om, s

    with nogil:
        for i in range(M):
            th = theta0[i]
            r = r0[i]
            s = 0
            k = 0
            while k < n:
                om = omegas[i, k]
                if om == 1:
                    uval = _pot(aupre, aupim, nku, mu, th, r)
                    vval = _pot(avpre, avpim, nkv, mv, th, r)
                    wval = _pot(awpre, awpim, nkw, mw, th, r)
                else:
                    uval = _pot(aumre, aumim, nkum, mum, th, r)
                    vval = _pot(avmre, avmim, nkvm, mvm, th, r)
                    wval = _pot(awmre, awmim, nkwm, mwm, th, r)
                th = th + r + eps * uval
                th = th - floor(th)
                r = r + eps * vval + eps * eps * wval
                k += 1
                if r <= lo + close_tol:
                    s = -1
                    break
                if r >= hi - close_tol:
                    s = 1
                    break
            ei[i] = k
            sd[i] = s
            te[i] = th
            re_[i] = r

    return exit_idx, side, theta_exit, r_exit
