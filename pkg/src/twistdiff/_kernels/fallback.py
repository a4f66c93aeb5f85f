"""Pure-numpy reference kernels, API-identical to the compiled core.

Vectorizes over trajectories inside each step.  Per-element arithmetic
follows the same expression order as the compiled kernel, so the two
backends agree to a few ulp; within one backend results are independent
of how the batch is chunked or threaded.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _horner(c, r):
    out = np.full_like(r, c[-1])
    for j in range(len(c) - 2, -1, -1):
        out = out * r + c[j]
    return out


def _pot(re, im, theta, r):
    out = _horner(re[0], r)
    for k in range(1, re.shape[0]):
        a = _horner(re[k], r)
        b = _horner(im[k], r)
        ang = TWO_PI * k * theta
        out = out + 2.0 * (a * np.cos(ang) - b * np.sin(ang))
    return out


def _eval_three(pots, plus, th, r, u, v, w):
    (upre, upim, umre, umim, vpre, vpim, vmre, vmim,
     wpre, wpim, wmre, wmim) = pots
    for sel, (ure, uim, vre, vim, wre, wim) in (
        (plus, (upre, upim, vpre, vpim, wpre, wpim)),
        (~plus, (umre, umim, vmre, vmim, wmre, wmim)),
    ):
        if not np.any(sel):
            continue
        tt = th[sel]
        rr = r[sel]
        u[sel] = _pot(ure, uim, tt, rr)
        v[sel] = _pot(vre, vim, tt, rr)
        w[sel] = _pot(wre, wim, tt, rr)


def run_paths(upre, upim, umre, umim, vpre, vpim, vmre, vmim,
              wpre, wpim, wmre, wmim,
              eps, theta0, r0, omegas, record):
    pots = (upre, upim, umre, umim, vpre, vpim, vmre, vmim,
            wpre, wpim, wmre, wmim)
    M, n = omegas.shape
    th = theta0.astype(np.float64).copy()
    r = r0.astype(np.float64).copy()
    r_path = np.empty((M, n + 1)) if record else None
    if record:
        r_path[:, 0] = r
    u = np.empty(M)
    v = np.empty(M)
    w = np.empty(M)
    for k in range(n):
        plus = omegas[:, k] == 1
        _eval_three(pots, plus, th, r, u, v, w)
        th = th + r + eps * u
        th = th - np.floor(th)
        r = r + eps * v + eps * eps * w
        if record:
            r_path[:, k + 1] = r
    return th, r, r_path


def run_exits(upre, upim, umre, umim, vpre, vpim, vmre, vmim,
              wpre, wpim, wmre, wmim,
              eps, theta0, r0, omegas, lo, hi, close_tol):
    pots = (upre, upim, umre, umim, vpre, vpim, vmre, vmim,
            wpre, wpim, wmre, wmim)
    M, n = omegas.shape
    th = theta0.astype(np.float64).copy()
    r = r0.astype(np.float64).copy()
    exit_idx = np.full(M, n, dtype=np.int64)
    side = np.zeros(M, dtype=np.int8)
    active = np.arange(M)
    k = 0
    while k < n and len(active):
        tha = th[active]
        ra = r[active]
        plus = omegas[active, k] == 1
        u = np.empty(len(active))
        v = np.empty(len(active))
        w = np.empty(len(active))
        _eval_three(pots, plus, tha, ra, u, v, w)
        tha = tha + ra + eps * u
        tha = tha - np.floor(tha)
        ra = ra + eps * v + eps * eps * w
        th[active] = tha
        r[active] = ra
        k += 1
        hit_lo = ra <= lo + close_tol
        hit_hi = ra >= hi - close_tol
        done = hit_lo | hit_hi
        if np.any(done):
            ids = active[done]
            exit_idx[ids] = k
            side[ids] = np.where(hit_lo[done], -1, 1).astype(np.int8)
            active = active[~done]
    return exit_idx, side, th, r
