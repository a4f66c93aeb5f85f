"""Normal form of the expected map: mollified generating function,
canonical change of variables, correction fields and the drift b(r).

The first-order average Ev is removed by a generating function
S(theta, r~) = theta r~ + eps S1(theta, r~) whose Fourier coefficients
solve the homological equation away from small divisors; a smooth bump
disables the correction near resonances.  The surviving second-order
r-term has theta-average b(r), the drift of the limiting diffusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import ResonantInput
from .potentials import TWO_PI, TrigPotential

# Finite-difference steps for action-derivatives of S1.  theta-derivatives
# are exact (harmonic factors); only d/dr goes through differences.
_FD1 = 1e-5
_FD2 = 1e-4


def bump_mu(x):
    """The standard C^inf bump: 1 on |x| <= 1, 0 on |x| >= 2.

    Built from the exp(-1/t) glue h via mu = h(2-t) / (h(2-t) + h(t-1)),
    which is symmetric about t = 3/2 (so mu(1.5) = 0.5 exactly) and
    monotone on [1, 2].
    """
    t = np.abs(np.asarray(x, dtype=float))
    out = np.ones_like(t)
    out[t >= 2.0] = 0.0
    mid = (t > 1.0) & (t < 2.0)
    if np.any(mid):
        tm = t[mid]
        ha = np.exp(-1.0 / (2.0 - tm))
        hb = np.exp(-1.0 / (tm - 1.0))
        out[mid] = ha / (ha + hb)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class NormalFormParams:
    """Resonance-window width and quadrature/differencing settings."""

    beta: float = 0.05
    n_quad: int = 4096
    d: int = 1  # harmonic cutoff of the system, sets the resonance set

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        # windows of radius 2*beta around distinct p/q with q <= 2d must
        # be disjoint; the closest pair is at distance 1/(2d(2d-1)).
        qq = 2 * self.d
        min_gap = 1.0 / (qq * max(qq - 1, 1))
        if 4.0 * self.beta >= min_gap:
            raise ValueError(
                f"beta={self.beta} too large: 2*beta-windows around "
                f"|q|<={qq} resonances overlap (min gap {min_gap:.4g})")


def resonances(d):
    """The finite resonance set: reduced p/q in [0, 1] with q <= 2d."""
    out = []
    for q in range(1, 2 * d + 1):
        for p in range(0, q + 1):
            if gcd(p, q) == 1:
                out.append(Fraction(p, q))
    return sorted(set(out))


def resonance_distance(r, d):
    """min |r - p/q| over reduced p/q with q <= 2d (r taken mod 1)."""
    x = np.asarray(r, dtype=float) % 1.0
    dist = np.full_like(x, np.inf)
    for pq in resonances(d):
        dist = np.minimum(dist, np.abs(x - float(pq)))
    if dist.ndim == 0:
        return float(dist)
    return dist


class GeneratingFunction:
    """S1(theta, r) with mollified small divisors.

    Coefficients: S1^k(r) = i Ev^k(r) (1 - mu_k(r)) / (2 pi k (1 - e^{2 pi i k r}))
    with mu_k(r) = mu(|1 - e^{2 pi i k r}| / (2 pi |k| beta)); S1^k = 0 for
    k = 0 and |k| > d.
    """

    def __init__(self, Ev: TrigPotential, beta: float):
        self.Ev = Ev
        self.beta = float(beta)
        self.degree = Ev.degree

    def mu_k(self, k, r):
        r = np.asarray(r, dtype=float)
        den = np.abs(1.0 - np.exp(TWO_PI * 1j * k * r))
        return bump_mu(den / (TWO_PI * abs(k) * self.beta))

    def coeff(self, k, r):
        """S1^k(r); exact zero wherever mu_k = 1."""
        if k == 0 or abs(k) > self.degree:
            return np.zeros_like(np.asarray(r, dtype=float), dtype=complex)
        r = np.asarray(r, dtype=float)
        one_minus_mu = 1.0 - np.asarray(self.mu_k(k, r))
        out = np.zeros_like(r, dtype=complex)
        live = one_minus_mu > 0.0
        if np.any(live):
            rl = r[live] if r.ndim else r
            den = 2.0 * np.pi * k * (1.0 - np.exp(TWO_PI * 1j * k * rl))
            val = 1j * self.Ev.coeff(k, rl) * \
                (one_minus_mu[live] if r.ndim else one_minus_mu) / den
            if r.ndim:
                out[live] = val
            else:
                out = val
        return out

    def eval(self, theta, r, dtheta=0, dr=0):
        """Evaluate d^dtheta_theta d^dr_r S1 (dr in {0, 1, 2} via central
        differences; theta-derivatives are exact)."""
        if dr == 1:
            h = _FD1
            return (self.eval(theta, np.asarray(r) + h, dtheta)
                    - self.eval(theta, np.asarray(r) - h, dtheta)) / (2.0 * h)
        if dr == 2:
            h = _FD2
            return (self.eval(theta, np.asarray(r) + h, dtheta)
                    - 2.0 * self.eval(theta, r, dtheta)
                    + self.eval(theta, np.asarray(r) - h, dtheta)) / (h * h)
        if dr != 0:
            raise ValueError("dr must be 0, 1 or 2")
        theta = np.asarray(theta, dtype=float)
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast(theta, r).shape)
        for k in range(1, self.degree + 1):
            ck = (TWO_PI * 1j * k) ** dtheta * self.coeff(k, r)
            ang = TWO_PI * k * theta
            out = out + 2.0 * (np.real(ck) * np.cos(ang)
                               - np.imag(ck) * np.sin(ang))
        if out.ndim == 0:
            return float(out)
        return out


def s1_coefficient(k, r, beta, Ev):
    """S1^k(r) for a single harmonic (module-level convenience)."""
    return GeneratingFunction(Ev, beta).coeff(k, r)


def homological_residual(Ev, s1: GeneratingFunction, theta, r):
    """Residual of  dS1/dtheta (theta, r) + Ev - dS1/dtheta (theta+r, r).

    Exact (to rounding) wherever all mollifiers vanish; returns the
    residual array together with the mask of grid points where every
    harmonic in Ev has mu_k = 0.
    """
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    res = (s1.eval(theta, r, dtheta=1) + Ev.eval(theta, r)
           - s1.eval((theta + r) % 1.0, r, dtheta=1))
    mask = np.ones(np.broadcast(theta, r).shape, dtype=bool)
    for k in range(1, Ev.degree + 1):
        if np.any(np.abs(Ev.coeff_poly(k)) > 1e-14):
            mask &= np.asarray(s1.mu_k(k, r)) == 0.0
    return res, mask


# ---------------------------------------------------------------------------
# Drift and correction fields
# ---------------------------------------------------------------------------

def drift_b(sys, r, params: NormalFormParams):
    """b(r) = int_0^1 [Ew - dEv/dtheta Eu
                       + dS1/dtheta (dEv/dr - dEv/dtheta + dEu/dtheta)] dtheta

    computed by exact Fourier pairing (int f g = sum_k f^k g^{-k}); the
    only transcendental ingredient is S1^k itself.  Vectorized over r.

    Raises ResonantInput when r is within beta of a low-order rational.
    """
    p = sys.potentials if hasattr(sys, "potentials") else sys
    d = max(p.degree, params.d)
    rarr = np.asarray(r, dtype=float)
    if np.any(resonance_distance(rarr, d) < params.beta - 1e-15):
        raise ResonantInput(
            f"r={r} lies within beta={params.beta} of a |q|<={2*d} resonance")
    s1 = GeneratingFunction(p.Ev, params.beta)
    Evp = p.Ev.dr()  # exact polynomial derivative

    total = p.Ew.coeff(0, rarr).astype(complex)
    for k in range(-d, d + 1):
        if k == 0:
            continue
        tpik = TWO_PI * 1j * k
        # - int dEv/dtheta * Eu
        total = total - tpik * p.Ev.coeff(k, rarr) * p.Eu.coeff(-k, rarr)
        # + int dS1/dtheta * G  with  G^k = (Ev^k)' - 2 pi i k Ev^k + 2 pi i k Eu^k
        gmk = (Evp.coeff(-k, rarr)
               - (-tpik) * p.Ev.coeff(-k, rarr)
               + (-tpik) * p.Eu.coeff(-k, rarr))
        total = total + tpik * s1.coeff(k, rarr) * gmk
    imag = float(np.max(np.abs(np.imag(np.atleast_1d(total)))))
    assert imag < 1e-10, f"drift integrand left imaginary residue {imag:.3e}"
    out = np.real(total)
    if out.ndim == 0:
        return float(out)
    return out


def correction_fields(Ev: TrigPotential, p, q, beta):
    """(E1, E3, Ev_{p,q}) for the resonance p/q.

    E1(theta, r)   = -sum_{0<|k|<=d} i (Ev^k)'(r) / (2 pi k) e^{2 pi i k theta}
    E3(theta)      = the same sum at r = p/q restricted to k outside the
                     resonant index set {k != 0, |k| <= 2d, k p/q integer}
    Ev_{p,q}       = the harmonics of Ev with k p/q integer.
    """
    if gcd(p, q) != 1:
        raise ValueError("p/q must be reduced")
    d = Ev.degree
    Evp = Ev.dr()
    e1_coeffs = {}
    e3_coeffs = {}
    evpq_coeffs = {}
    for k in range(1, d + 1):
        ck = -1j * np.asarray(Evp.coeff_poly(k)) / (TWO_PI * k)
        e1_coeffs[k] = ck
        resonant = (k * p) % q == 0
        if resonant:
            evpq_coeffs[k] = Ev.coeff_poly(k)
        else:
            e3_coeffs[k] = [complex(np.polynomial.polynomial.polyval(
                p / q, ck))]
    E1 = TrigPotential(e1_coeffs, degree=d)
    E3 = TrigPotential(e3_coeffs, degree=d)
    Evpq = TrigPotential(evpq_coeffs, degree=d)
    return E1, E3, Evpq


def e2_field(sys, s1: GeneratingFunction, theta, r):
    """E2 from the post-cancellation expansion of the conjugated map.

    All derivatives of S1 in theta are exact; d/dr uses central
    differences.  Valid in the far-from-resonance region.
    """
    p = sys.potentials if hasattr(sys, "potentials") else sys
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    ths = (theta + r) % 1.0

    s1_t = s1.eval(theta, r, dtheta=1)
    s1_r = s1.eval(theta, r, dr=1)
    s1_tt = s1.eval(theta, r, dtheta=2)
    s1_tt_s = s1.eval(ths, r, dtheta=2)
    s1_tr_s = s1.eval(ths, r, dtheta=1, dr=1)
    s1_t_s = s1.eval(ths, r, dtheta=1)

    Ev_t = p.Ev.dtheta()
    Ev_r = p.Ev.dr()
    return (p.Ew.eval(theta, r)
            - Ev_t.eval(theta, r) * s1_r
            + Ev_r.eval(theta, r) * s1_t
            - s1_tt * s1_r
            - s1_tt_s * (p.Eu.eval(theta, r) + s1_t - s1_r)
            - s1_tr_s * (p.Ev.eval(theta, r) + s1_t - s1_t_s))


# ---------------------------------------------------------------------------
# The canonical change of variables
# ---------------------------------------------------------------------------

def phi(s1: GeneratingFunction, point, eps):
    """Second-order expansion of Phi(theta~, r~) -> (theta, r)."""
    th, r = point
    s1_r = s1.eval(th, r, dr=1)
    s1_t = s1.eval(th, r, dtheta=1)
    s1_tr = s1.eval(th, r, dtheta=1, dr=1)
    s1_tt = s1.eval(th, r, dtheta=2)
    theta = th - eps * s1_r + eps * eps * s1_tr * s1_r
    rr = r + eps * s1_t - eps * eps * s1_tt * s1_r
    return theta % 1.0, rr


def phi_inverse(s1: GeneratingFunction, point, eps):
    """Second-order expansion of Phi^{-1}(theta, r) -> (theta~, r~)."""
    th, r = point
    s1_r = s1.eval(th, r, dr=1)
    s1_t = s1.eval(th, r, dtheta=1)
    s1_rr = s1.eval(th, r, dr=2)
    s1_tr = s1.eval(th, r, dtheta=1, dr=1)
    theta = th + eps * s1_r - eps * eps * s1_rr * s1_t
    rr = r - eps * s1_t + eps * eps * s1_tr * s1_t
    return theta % 1.0, rr


def _circ_abs(x):
    y = np.abs(np.asarray(x)) % 1.0
    return np.minimum(y, 1.0 - y)


def fit_exponent(eps_list, values):
    """Least-squares slope of log(values) against log(eps)."""
    eps_list = np.asarray(eps_list, dtype=float)
    values = np.asarray(values, dtype=float)
    good = values > 0.0
    if np.count_nonzero(good) < 2:
        return np.inf
    return float(np.polyfit(np.log(eps_list[good]), np.log(values[good]),
                            1)[0])


@dataclass
class ScalingReport:
    eps_list: list
    residuals: list
    exponent: float


def phi_roundtrip_report(s1, eps_list, r_window, n_theta=64, n_r=17):
    """Max deviation of Phi^{-1} o Phi from the identity, per eps."""
    theta = np.linspace(0.0, 1.0, n_theta, endpoint=False)
    rs = np.linspace(r_window[0], r_window[1], n_r)
    T, R = np.meshgrid(theta, rs, indexing="ij")
    devs = []
    for eps in eps_list:
        t1, r1 = phi(s1, (T, R), eps)
        t2, r2 = phi_inverse(s1, (t1, r1), eps)
        dev = np.maximum(_circ_abs(t2 - T), np.abs(r2 - R))
        devs.append(float(np.max(dev)))
    return ScalingReport(list(eps_list), devs, fit_exponent(eps_list, devs))


def conjugacy_residual(base_sys, params: NormalFormParams, r_window,
                       eps_list, n_theta=64, n_r=17):
    """Scaling of the r-residual of Phi^{-1} o Ef o Phi - (r~ + eps^2 E2).

    The window must stay in the far-from-resonance region (its closure at
    least 3*beta from every low-order rational, so all mollifiers vanish
    there); the fitted eps-exponent should reach min(2+a, 3) up to fit
    noise.
    """
    from dataclasses import replace

    p = base_sys.potentials
    d = max(p.degree, params.d)
    edge = min(resonance_distance(r_window[0], d),
               resonance_distance(r_window[1], d))
    if edge < params.beta:
        raise ResonantInput(
            f"window {r_window} within beta={params.beta} of a resonance")
    s1 = GeneratingFunction(p.Ev, params.beta)
    theta = np.linspace(0.0, 1.0, n_theta, endpoint=False)
    rs = np.linspace(r_window[0], r_window[1], n_r)
    T, R = np.meshgrid(theta, rs, indexing="ij")
    E2 = e2_field(base_sys, s1, T, R)
    res = []
    for eps in eps_list:
        sys_eps = replace(base_sys, eps=eps)
        t1, r1 = phi(s1, (T, R), eps)
        t2, r2 = _expected_map_grid(sys_eps, t1, r1)
        t3, r3 = phi_inverse(s1, (t2, r2), eps)
        resid = np.abs(r3 - (R + eps * eps * E2))
        res.append(float(np.max(resid)))
    return ScalingReport(list(eps_list), res, fit_exponent(eps_list, res))


def near_conjugacy_residual(base_sys, params: NormalFormParams, p_res, q_res,
                            eps_list, half_width=None, n_theta=64, n_r=9):
    """Near-resonance check: r-residual against r~ + eps Ev_{p,q} is O(eps^2)."""
    from dataclasses import replace

    p = base_sys.potentials
    s1 = GeneratingFunction(p.Ev, params.beta)
    _, _, Evpq = correction_fields(p.Ev, p_res, q_res, params.beta)
    c = p_res / q_res
    hw = half_width if half_width is not None else params.beta / 2.0
    theta = np.linspace(0.0, 1.0, n_theta, endpoint=False)
    rs = np.linspace(c - hw, c + hw, n_r)
    T, R = np.meshgrid(theta, rs, indexing="ij")
    res = []
    for eps in eps_list:
        sys_eps = replace(base_sys, eps=eps)
        t1, r1 = phi(s1, (T, R), eps)
        t2, r2 = _expected_map_grid(sys_eps, t1, r1)
        t3, r3 = phi_inverse(s1, (t2, r2), eps)
        resid = np.abs(r3 - (R + eps * Evpq.eval(T, R)))
        res.append(float(np.max(resid)))
    return ScalingReport(list(eps_list), res, fit_exponent(eps_list, res))


def _expected_map_grid(sys, theta, r):
    """The expected map Ef applied pointwise on arrays (zero hooks)."""
    p = sys.potentials
    eps = sys.eps
    th_new = (theta + r + eps * p.Eu.eval(theta, r)) % 1.0
    r_new = r + eps * p.Ev.eval(theta, r) + eps * eps * p.Ew.eval(theta, r)
    return th_new, r_new


# ---------------------------------------------------------------------------
# Assembled normal-form data
# ---------------------------------------------------------------------------

@dataclass
class NormalFormData:
    """Drift/variance tables plus the generating function that built them."""

    s1: GeneratingFunction
    params: NormalFormParams
    r_grid: np.ndarray
    b_values: np.ndarray
    sigma2_values: np.ndarray
    E1: TrigPotential = None

    def as_rows(self):
        return np.column_stack([self.r_grid, self.b_values,
                                self.sigma2_values])


def build_normal_form(sys, params: NormalFormParams, r_grid=None):
    """Tabulate (r, b(r), sigma^2(r)) on a nonresonant grid."""
    p = sys.potentials if hasattr(sys, "potentials") else sys
    d = max(p.degree, params.d)
    if r_grid is None:
        r_grid = nonresonant_grid(d, params.beta, 200)
    r_grid = np.asarray(r_grid, dtype=float)
    b_vals = drift_b(sys, r_grid, params)
    s2 = p.sigma_squared(r_grid)
    E1 = correction_fields(p.Ev, 0, 1, params.beta)[0]
    return NormalFormData(GeneratingFunction(p.Ev, params.beta), params,
                          r_grid, np.atleast_1d(b_vals), np.atleast_1d(s2),
                          E1)


def nonresonant_grid(d, beta, n, lo=0.0, hi=1.0):
    """n points of [lo, hi] at distance >= beta from |q| <= 2d resonances."""
    grid = []
    m = n * 8
    for x in np.linspace(lo, hi, m):
        if resonance_distance(x, d) >= beta:
            grid.append(x)
    if len(grid) < n:
        raise ValueError("not enough nonresonant points; shrink beta")
    idx = np.linspace(0, len(grid) - 1, n).astype(int)
    return np.asarray(grid)[idx]
