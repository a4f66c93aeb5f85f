"""Resonance and strip arithmetic.

Best rational approximations, totally-irrational / imaginary-rational
classification of action strips, the exact measure of the IR union, and
ergodization times for Birkhoff sums along rotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor, gcd
from typing import Optional

import numpy as np

from .errors import AmbiguousClass, NotTIAdmissible

NU = 0.25  # the fixed exponent of the resonance neighbourhood width


@dataclass(frozen=True)
class StripParams:
    """The exponent ledger with its admissibility constraints.

    Derived fields (R, rho, b, zeta) are computed from (l, gamma, tau,
    delta, a); nu is fixed at 1/4.
    """

    l: int = 6
    d: int = 1
    gamma: float = 0.81
    tau: float = 0.01
    beta: float = 0.05
    kappa: float = 0.2
    delta: float = 1e-3
    a: float = 0.55

    def __post_init__(self):
        if self.l < 6:
            raise ValueError("l must be >= 6")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0.8 < self.gamma < 0.8 + 1.0 / 40.0:
            raise ValueError("gamma must lie in (4/5, 4/5 + 1/40)")
        if not 0.0 < self.tau < 1.0 / 40.0:
            raise ValueError("tau must lie in (0, 1/40)")
        # The admissible kappa interval, read with the endpoints in
        # increasing order.
        if not 1.0 / 11.0 < self.kappa < 1.0 / 3.0:
            raise ValueError("kappa must lie in (1/11, 1/3)")
        if not 0.0 < self.delta < self.tau:
            raise ValueError("delta must lie in (0, tau)")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        slack = 2.0 * (1.0 - self.gamma) - self.nu - self.b
        if slack < 1.0 / 160.0 - 1e-12:
            raise ValueError(
                f"exponent slack 2(1-gamma)-nu-b = {slack:.6g} < 1/160")

    @property
    def nu(self):
        return NU

    @property
    def R(self):
        return (self.l - 5.0) / (self.l - 2.0)

    @property
    def rho(self):
        return self.R * self.nu

    @property
    def b(self):
        return (self.nu - self.rho) / 2.0

    @property
    def zeta(self):
        return min(self.tau - self.delta, 0.2 - 3.0 * self.delta,
                   self.a - self.delta)

    def qmax(self, eps):
        """Largest admissible IR denominator, floor(eps^-b)."""
        return max(1, floor(eps ** (-self.b)))


@dataclass(frozen=True)
class StripClass:
    """Classification of one action strip."""

    interval: tuple
    tag: str  # "TI" | "IR" | "Resonant"
    p: Optional[int] = None
    q: Optional[int] = None

    @property
    def witness(self):
        if self.q is None:
            return None
        return Fraction(self.p, self.q)


def best_rational(r, qmax):
    """Closest p/q to r with 1 <= q <= qmax, gcd(p, q) = 1.

    Exact via continued-fraction convergents/semiconvergents
    (Fraction.limit_denominator).  Returns (p, q, |r - p/q|).
    """
    if qmax < 1:
        raise ValueError("qmax must be >= 1")
    frac = Fraction(r).limit_denominator(qmax)
    err = abs(Fraction(r) - frac)
    return frac.numerator, frac.denominator, float(err)


def _interval_distance(x, lo, hi):
    """Distance from the point x to the interval [lo, hi]."""
    if x < lo:
        return lo - x
    if x > hi:
        return x - hi
    return 0.0


def _rationals_near(lo, hi, qmin, qmax, dist):
    """Reduced p/q with qmin <= q <= qmax within dist of [lo, hi]."""
    out = []
    for q in range(qmin, qmax + 1):
        pmin = floor(q * (lo - dist))
        pmax = floor(q * (hi + dist)) + 1
        for p in range(pmin, pmax + 1):
            if gcd(p, q) != 1:
                continue
            if _interval_distance(p / q, lo, hi) <= dist:
                out.append((p, q))
    return out


def classify(interval, params: StripParams, eps):
    """Classify a strip as Resonant, ImaginaryRational or TotallyIrrational.

    Resonant: some p/q with q <= 2d within 2*beta of the interval.
    IR: some p/q with 2d < q < eps^-b within eps^nu (unique by the
    parameter relation b = (nu - rho)/2; two witnesses raise
    AmbiguousClass).  Otherwise TI.
    """
    lo, hi = float(interval[0]), float(interval[1])
    res = _rationals_near(lo, hi, 1, 2 * params.d, 2.0 * params.beta)
    if res:
        # report the lowest-order resonance
        p, q = min(res, key=lambda pq: (pq[1], abs(pq[0])))
        return StripClass((lo, hi), "Resonant", p, q)
    # strict upper inequality |q| < eps^-b: drop the endpoint when
    # eps^-b is itself an integer (to within the float guard band)
    qbound = eps ** (-params.b)
    qmax = floor(qbound)
    if abs(qbound - round(qbound)) < 1e-12 and qmax == round(qbound):
        qmax -= 1
    witnesses = []
    if qmax > 2 * params.d:
        witnesses = _rationals_near(lo, hi, 2 * params.d + 1, qmax,
                                    eps ** params.nu)
    if len(witnesses) > 1:
        raise AmbiguousClass(
            f"strip [{lo}, {hi}] has {len(witnesses)} IR witnesses "
            f"{witnesses}; parameter relation violated")
    if witnesses:
        p, q = witnesses[0]
        return StripClass((lo, hi), "IR", p, q)
    return StripClass((lo, hi), "TI")


def ir_intervals(params: StripParams, eps, r_range=(0.0, 1.0)):
    """The merged eps^nu-resonance intervals around the Farey set.

    The Farey set takes all reduced p/q in [0, 1] with q <= floor(eps^-b)
    (integers are always included); each contributes
    [p/q - 2 eps^nu, p/q + 2 eps^nu] clipped to the range.
    """
    lo, hi = float(r_range[0]), float(r_range[1])
    w = 2.0 * eps ** params.nu
    qmax = params.qmax(eps)
    raw = []
    for q in range(1, qmax + 1):
        for p in range(0, q + 1):
            # gcd(0,1)=gcd(1,1)=1, so both endpoints enter via q=1 only
            if gcd(p, q) != 1:
                continue
            c = p / q
            a, b_ = max(lo, c - w), min(hi, c + w)
            if a < b_:
                raw.append((a, b_))
    raw.sort()
    merged = []
    for a, b_ in raw:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b_))
        else:
            merged.append((a, b_))
    return merged


def ir_measure(params: StripParams, eps, r_range=(0.0, 1.0)):
    """Exact Lebesgue measure of the union of IR intervals."""
    return float(sum(b_ - a for a, b_ in ir_intervals(params, eps, r_range)))


def _convergents(x):
    """Yield continued-fraction convergents (p, q) of x (exact)."""
    frac = Fraction(x)
    a = frac.numerator // frac.denominator
    p0, q0, p1, q1 = 1, 0, a, 1
    yield p1, q1
    rem = frac - a
    while rem != 0:
        frac = 1 / rem
        a = frac.numerator // frac.denominator
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
        rem = frac - a


def is_ti_admissible(rstar, params: StripParams, eps):
    """True when every p/q within eps^nu of rstar has q > eps^-b."""
    x = float(rstar)
    for q in range(1, floor(eps ** (-params.b)) + 1):
        p = round(q * x)
        if abs(x - p / q) < eps ** params.nu:
            return False
    return True


def ergodization_time(rstar, params: StripParams, eps):
    """Number of rotation steps N ergodizing the theta-average.

    Follows the convergent/pigeonhole construction: N <= eps^-(nu+b+2tau)
    with |N rstar - p| <= 2 eps^(nu+b+2tau) (zero when rstar is rational
    with admissible denominator).  rstar may be a float or a Fraction.

    Raises NotTIAdmissible when rstar violates the TI condition.
    """
    if not is_ti_admissible(rstar, params, eps):
        raise NotTIAdmissible(
            f"r* = {rstar} has a low-order rational within eps^nu")
    nmax = eps ** (-(params.nu + params.b + 2.0 * params.tau))
    frac = Fraction(rstar)
    if frac.denominator <= nmax:
        return frac.denominator
    best = None
    for p, q in _convergents(frac):
        if q > nmax:
            break
        best = (p, q)
    if best is None:
        raise NotTIAdmissible(
            f"no convergent denominator of {rstar} below {nmax:.3g}")
    p, q = best
    err = abs(q * frac - p)
    if err > 2.0 * eps ** (params.nu + params.b + 2.0 * params.tau):
        raise NotTIAdmissible(
            f"pigeonhole defect {float(err):.3g} too large for r* = {rstar}")
    return q


def birkhoff_deviation(g, theta_star, rstar, N):
    """| N * int g dtheta  -  sum_{k<N} g(theta* + k r*, r*) |."""
    rstar = float(rstar)
    k = np.arange(N)
    theta = (float(theta_star) + k * rstar) % 1.0
    total = float(np.sum(g.eval(theta, np.full(N, rstar))))
    mean = float(g.mean(rstar))
    return abs(N * mean - total)


def fourier_support(sys):
    """Positive harmonics k with (Eu^k, Ev^k) nonzero as polynomials."""
    out = []
    for k in range(1, sys.degree + 1):
        if np.any(np.abs(sys.Eu.coeff_poly(k)) > 1e-14) or \
           np.any(np.abs(sys.Ev.coeff_poly(k)) > 1e-14):
            out.append(k)
    return out
