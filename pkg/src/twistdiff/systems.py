"""Ready-made map systems: named examples, exact (zero-drift) systems
built from a generating function, and randomized instances for stress
tests."""

from __future__ import annotations

import numpy as np

from .dynamics import MapSystem
from .potentials import SystemPotentials, TrigPotential


def cos_sin_potentials():
    """The reduced standard-map pair: u_1 = v_1 = cos(2 pi theta),
    u_{-1} = v_{-1} = sin(2 pi theta), w = 0.  sigma^2 = 1/4."""
    c = TrigPotential.cosine(1)
    s = TrigPotential.sine(1)
    z = TrigPotential.zero()
    return SystemPotentials(c, s, c, s, z, z)


def cos_sin_system(eps, a=0.55, l=7):
    return MapSystem(cos_sin_potentials(), eps=eps, a=a, l=l)


def constant_w_potentials(c=0.3, amp=1.0):
    """Antisymmetric first order (Eu = Ev = 0) with constant Ew = c.

    The drift is exactly c and sigma^2 = amp^2 / 2, independent of r.
    """
    cpot = TrigPotential.cosine(1, amp)
    w = TrigPotential.constant(c)
    return SystemPotentials(cpot, -cpot, cpot, -cpot, w, w)


def constant_w_system(eps, c=0.3, a=0.55, l=7):
    return MapSystem(constant_w_potentials(c), eps=eps, a=a, l=l)


def exact_potentials(P: TrigPotential, du=None, dv=None, dw=None):
    """An exact area-preserving expected map from a generating function.

    With S(theta, r') = theta r' + r'^2/2 + eps P(theta, r') the induced
    expansion has Eu = dP/dr - dP/dtheta, Ev = -dP/dtheta and
    Ew = (d^2 P / dr dtheta) (dP/dtheta); the drift of such a system
    vanishes identically.  The optional half-differences (du, dv, dw) are
    added to the +1 potentials and subtracted from the -1 ones, so they
    change neither the expected map nor the drift.
    """
    Pt = P.dtheta()
    Eu = P.dr() - Pt
    Ev = -1.0 * Pt
    Ew = P.dr().dtheta() * Pt
    du = du if du is not None else TrigPotential.zero()
    dv = dv if dv is not None else TrigPotential.cosine(1, 0.25)
    dw = dw if dw is not None else TrigPotential.zero()
    return SystemPotentials(Eu + du, Eu - du, Ev + dv, Ev - dv,
                            Ew + dw, Ew - dw)


def random_generating_function(rng, degree=1, rdegree=2, scale=0.1):
    """A random trig polynomial P with no theta-average (so v = -dP/dtheta
    automatically satisfies the zero-average hypothesis)."""
    coeffs = {}
    for k in range(1, degree + 1):
        coeffs[k] = (rng.standard_normal(rdegree + 1)
                     + 1j * rng.standard_normal(rdegree + 1)) * scale
    return TrigPotential(coeffs, degree=degree)


def random_exact_system(rng, eps, degree=1, rdegree=2, a=0.55, l=7):
    """Random exact system, rescaled so max |v_i| stays below 0.9."""
    P = random_generating_function(rng, degree, rdegree)
    vmax = P.dtheta().max_abs(0.0, 1.0)
    if vmax > 0.5:
        P = (0.5 / vmax) * P
    pots = exact_potentials(P)
    return MapSystem(pots, eps=eps, a=a, l=l)


def random_potential(rng, degree=2, rdegree=1, scale=0.2, mean_zero=True):
    coeffs = {}
    if not mean_zero:
        coeffs[0] = rng.standard_normal(rdegree + 1) * scale
    for k in range(1, degree + 1):
        coeffs[k] = (rng.standard_normal(rdegree + 1)
                     + 1j * rng.standard_normal(rdegree + 1)) * scale / k
    return TrigPotential(coeffs, degree=degree)


def random_system(rng, eps, degree=2, rdegree=1, a=0.55, l=7):
    """A generic random system obeying the structural hypotheses H0/H2
    and the max |v_i| <= 1 normalization (but nothing else by design)."""
    pots = SystemPotentials(
        random_potential(rng, degree, rdegree),
        random_potential(rng, degree, rdegree),
        random_potential(rng, degree, rdegree),
        random_potential(rng, degree, rdegree),
        random_potential(rng, degree, rdegree, mean_zero=False),
        random_potential(rng, degree, rdegree, mean_zero=False),
    )
    return MapSystem(pots, eps=eps, a=a, l=l)


BUILTIN_SYSTEMS = {
    "cos_sin": lambda eps, **kw: cos_sin_system(eps, **kw),
    "constant_w": lambda eps, **kw: constant_w_system(eps, **kw),
}
