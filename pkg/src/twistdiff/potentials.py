"""Trigonometric-polynomial potentials with polynomial action dependence.

A potential is a real function of (theta, r) of the form

    p(theta, r) = sum_{|k| <= d} c_k(r) exp(2 pi i k theta),

where each Fourier coefficient c_k is a polynomial in r with complex
coefficients and c_{-k} = conj(c_k), so evaluation is real.  Keeping the
r-dependence polynomial makes every derivative exact, which is what lets
the drift computations run at 1e-8 tolerances without numerical
differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import IllConditioned

TWO_PI = 2.0 * np.pi

# Tolerance band for root-based hypothesis checks: margins at or above
# the upper edge certify a pass, margins at or below the lower edge a
# fail, and anything in between is reported as ill-conditioned.
_MARGIN_FAIL = 1e-9
_MARGIN_PASS = 1e-8


def _as_poly(c):
    arr = np.atleast_1d(np.asarray(c, dtype=complex))
    if arr.ndim != 1:
        raise ValueError("coefficient polynomial must be one-dimensional")
    return arr


def _trim(arr, tol=0.0):
    """Drop trailing (near-)zero polynomial coefficients, keeping >= 1."""
    n = len(arr)
    while n > 1 and abs(arr[n - 1]) <= tol:
        n -= 1
    return arr[:n]


class TrigPotential:
    """Real trigonometric polynomial in theta, polynomial in r.

    Parameters
    ----------
    coeffs : mapping
        Maps the harmonic index k to the ascending-power polynomial
        coefficients of c_k(r).  Negative harmonics may be omitted, in
        which case they are filled in by conjugate symmetry; if both
        k and -k are given they must be conjugate.
    degree : int, optional
        Harmonic cutoff d.  Defaults to the largest |k| present
        (at least 1).
    """

    __slots__ = ("degree", "_rows")

    def __init__(self, coeffs=None, degree=None):
        coeffs = dict(coeffs or {})
        maxk = max((abs(k) for k in coeffs), default=0)
        if degree is None:
            degree = max(maxk, 1)
        if maxk > degree:
            raise ValueError(f"harmonic {maxk} exceeds degree {degree}")
        m = 1
        for c in coeffs.values():
            m = max(m, len(_as_poly(c)))
        rows = np.zeros((degree + 1, m), dtype=complex)
        seen = set()
        for k, c in coeffs.items():
            c = _as_poly(c)
            kk = abs(k)
            val = np.conj(c) if k < 0 else c
            if kk in seen:
                if not np.allclose(rows[kk, : len(val)], val, atol=1e-14):
                    raise ValueError(
                        f"harmonics +-{kk} violate conjugate symmetry"
                    )
            else:
                rows[kk, : len(val)] = val
                seen.add(kk)
        if np.max(np.abs(rows[0].imag), initial=0.0) > 1e-14:
            raise ValueError("k=0 coefficient must be real")
        rows[0] = rows[0].real
        self.degree = int(degree)
        self._rows = rows
        self._rows.setflags(write=False)

    @classmethod
    def _from_rows(cls, rows, degree):
        self = cls.__new__(cls)
        rows = np.array(rows, dtype=complex)
        rows[0] = rows[0].real
        self.degree = int(degree)
        self._rows = rows
        self._rows.setflags(write=False)
        return self

    @classmethod
    def zero(cls, degree=1):
        return cls({}, degree=degree)

    @classmethod
    def cosine(cls, k=1, amp=1.0):
        """amp * cos(2 pi k theta)."""
        return cls({k: [amp / 2.0]})

    @classmethod
    def sine(cls, k=1, amp=1.0):
        """amp * sin(2 pi k theta)."""
        return cls({k: [-0.5j * amp]})

    @classmethod
    def constant(cls, c):
        return cls({0: [c]})

    # -- coefficient access -------------------------------------------------

    @property
    def rdegree(self):
        return self._rows.shape[1] - 1

    def coeff_poly(self, k):
        """Ascending-power polynomial of c_k(r) (complex array)."""
        if abs(k) > self.degree:
            return np.zeros(1, dtype=complex)
        row = self._rows[abs(k)]
        return np.conj(row) if k < 0 else row.copy()

    def coeff(self, k, r):
        """c_k(r), vectorized in r."""
        if abs(k) > self.degree:
            return np.zeros_like(np.asarray(r, dtype=float), dtype=complex)
        val = P.polyval(np.asarray(r, dtype=float), self._rows[abs(k)])
        return np.conj(val) if k < 0 else val

    def kernel_rows(self):
        """(real, imag) float arrays of shape (degree+1, rdeg+1) for k >= 0."""
        return (
            np.ascontiguousarray(self._rows.real),
            np.ascontiguousarray(self._rows.imag),
        )

    # -- evaluation ---------------------------------------------------------

    def eval(self, theta, r):
        """Evaluate at (theta, r); broadcasts over array inputs.

        Uses the conjugate-symmetric real form, so the result carries no
        imaginary rounding residue at all.
        """
        theta = np.asarray(theta, dtype=float)
        r = np.asarray(r, dtype=float)
        out = np.real(P.polyval(r, self._rows[0])) * np.ones_like(theta)
        for k in range(1, self.degree + 1):
            ck = P.polyval(r, self._rows[k])
            ang = TWO_PI * k * theta
            out = out + 2.0 * (ck.real * np.cos(ang) - ck.imag * np.sin(ang))
        if out.ndim == 0:
            return float(out)
        return out

    __call__ = eval

    # -- calculus -----------------------------------------------------------

    def dtheta(self, order=1):
        """Partial derivative in theta of the given order."""
        rows = self._rows.copy()
        for k in range(self.degree + 1):
            rows[k] *= (TWO_PI * 1j * k) ** order
        return TrigPotential._from_rows(rows, self.degree)

    def dr(self):
        """Partial derivative in r (exact, polynomial coefficients)."""
        if self._rows.shape[1] == 1:
            return TrigPotential._from_rows(
                np.zeros((self.degree + 1, 1), dtype=complex), self.degree
            )
        rows = P.polyder(self._rows, axis=1)
        return TrigPotential._from_rows(rows, self.degree)

    # -- algebra ------------------------------------------------------------

    def _binary(self, other, sign):
        d = max(self.degree, other.degree)
        m = max(self._rows.shape[1], other._rows.shape[1])
        rows = np.zeros((d + 1, m), dtype=complex)
        rows[: self.degree + 1, : self._rows.shape[1]] = self._rows
        rows[: other.degree + 1, : other._rows.shape[1]] += sign * other._rows
        return TrigPotential._from_rows(rows, d)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return TrigPotential._from_rows(-self._rows, self.degree)

    def __mul__(self, other):
        if isinstance(other, TrigPotential):
            return self._product(other)
        return TrigPotential._from_rows(self._rows * other, self.degree)

    __rmul__ = __mul__

    def _product(self, other):
        """Exact trigonometric product (harmonic convolution)."""
        d1, d2 = self.degree, other.degree
        d = d1 + d2
        m = self._rows.shape[1] + other._rows.shape[1] - 1
        full = np.zeros((2 * d + 1, m), dtype=complex)
        for ka in range(-d1, d1 + 1):
            ca = self.coeff_poly(ka)
            if not np.any(ca):
                continue
            for kb in range(-d2, d2 + 1):
                cb = other.coeff_poly(kb)
                if not np.any(cb):
                    continue
                prod = np.convolve(ca, cb)
                full[ka + kb + d, : len(prod)] += prod
        rows = full[d:]
        return TrigPotential._from_rows(rows, d)

    # -- integral quantities -------------------------------------------------

    def mean(self, r):
        """theta-average, i.e. the k=0 coefficient c_0(r)."""
        return np.real(P.polyval(np.asarray(r, dtype=float), self._rows[0]))

    def l2sq(self, r):
        """int_0^1 p(theta, r)^2 dtheta = sum_k |c_k(r)|^2 (Parseval)."""
        r = np.asarray(r, dtype=float)
        total = np.abs(P.polyval(r, self._rows[0])) ** 2
        for k in range(1, self.degree + 1):
            total = total + 2.0 * np.abs(P.polyval(r, self._rows[k])) ** 2
        return total

    def is_zero(self, tol=0.0):
        return bool(np.max(np.abs(self._rows), initial=0.0) <= tol)

    def max_abs(self, r_lo, r_hi, n_theta=512, n_r=65):
        """Grid maximum of |p| over [0,1) x [r_lo, r_hi]."""
        theta = np.linspace(0.0, 1.0, n_theta, endpoint=False)
        rs = np.linspace(r_lo, r_hi, n_r)
        vals = self.eval(theta[:, None], rs[None, :])
        return float(np.max(np.abs(vals)))

    def __repr__(self):
        return f"TrigPotential(degree={self.degree}, rdegree={self.rdegree})"


class SystemPotentials:
    """The six potentials u_{+-1}, v_{+-1}, w_{+-1} and their combinations.

    The derived half-sum / half-difference potentials Eu, Ev, u, v and the
    expected second-order potential Ew are precomputed and immutable.
    """

    def __init__(self, u_plus, u_minus, v_plus, v_minus, w_plus, w_minus,
                 r_range=(0.0, 1.0)):
        self.u_plus, self.u_minus = u_plus, u_minus
        self.v_plus, self.v_minus = v_plus, v_minus
        self.w_plus, self.w_minus = w_plus, w_minus
        self.r_range = (float(r_range[0]), float(r_range[1]))
        self.Eu = 0.5 * (u_plus + u_minus)
        self.Ev = 0.5 * (v_plus + v_minus)
        self.Ew = 0.5 * (w_plus + w_minus)
        self.u_diff = 0.5 * (u_plus - u_minus)
        self.v_diff = 0.5 * (v_plus - v_minus)
        lo, hi = self.r_range
        vmax = max(v_plus.max_abs(lo, hi), v_minus.max_abs(lo, hi))
        if vmax > 1.0 + 1e-9:
            raise ValueError(
                f"normalization max|v_i| <= 1 violated (max = {vmax:.6g}); "
                "rescale epsilon"
            )

    @property
    def degree(self):
        return max(
            p.degree
            for p in (self.u_plus, self.u_minus, self.v_plus, self.v_minus)
        )

    def sigma_squared(self, r):
        """sigma^2(r) = int_0^1 v(theta, r)^2 dtheta via Parseval."""
        return self.v_diff.l2sq(r)


def expected_difference(sys):
    """Return (Eu, Ev, u, v): half-sums and half-differences."""
    return sys.Eu, sys.Ev, sys.u_diff, sys.v_diff


def sigma_squared(sys, r):
    return sys.sigma_squared(r)


# ---------------------------------------------------------------------------
# Hypothesis checking
# ---------------------------------------------------------------------------

@dataclass
class HypothesisResult:
    name: str
    passed: bool
    witness: dict = field(default_factory=dict)


@dataclass
class HypothesisReport:
    """Per-hypothesis verdicts plus the reduced-case bookkeeping.

    ``reduced`` is true for the area-preserving standard-map special case
    (u_i = v_i, r-independent), where only H0-H2 are required; otherwise
    all of H0-H5 are required.
    """

    results: dict
    reduced: bool

    @property
    def required(self):
        return ("H0", "H1", "H2") if self.reduced else (
            "H0", "H1", "H2", "H3", "H4", "H5")

    @property
    def passed(self):
        return all(self.results[h].passed for h in self.required)

    def to_dict(self):
        return {
            "reduced": self.reduced,
            "passed": self.passed,
            "required": list(self.required),
            "hypotheses": {
                name: {"passed": res.passed, "witness": res.witness}
                for name, res in self.results.items()
            },
        }


def _theta_roots(f, degree, n_seed=None):
    """Roots of a real 1-periodic function with <= 2*degree sign changes.

    Dense sampling at 64*degree points brackets every sign change of a
    trig polynomial of this degree; each bracket is bisected to 1e-12.
    """
    from scipy.optimize import brentq

    n = n_seed or max(64 * max(degree, 1), 128)
    theta = np.linspace(0.0, 1.0, n, endpoint=False)
    vals = np.asarray([f(t) for t in theta])
    roots = []
    for i in range(n):
        a, b = theta[i], theta[i] + 1.0 / n
        fa, fb = vals[i], vals[(i + 1) % n]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(brentq(f, a, b, xtol=1e-13, rtol=1e-15))
    return np.asarray(roots)


def _circ_dist(a, b):
    d = abs((a - b) % 1.0)
    return min(d, 1.0 - d)


def _coprime_pairs(qmax):
    from math import gcd

    for q in range(1, qmax + 1):
        for p in range(q):
            if gcd(p, q) == 1:
                yield p, q


def check_hypotheses(sys, r_range=None, sigma_tol=1e-10):
    """Verify hypotheses H0-H5 on the given r-range.

    Returns a :class:`HypothesisReport`.  Raises :class:`IllConditioned`
    when a root margin falls inside the undecidable tolerance band.
    """
    if r_range is None:
        r_range = sys.r_range
    lo, hi = float(r_range[0]), float(r_range[1])
    d = sys.degree
    results = {}

    # H0: each v_i has zero theta-average for every r, i.e. the k=0
    # coefficient polynomial vanishes identically.
    h0_bad = {}
    for name, pot in (("v_plus", sys.v_plus), ("v_minus", sys.v_minus)):
        c0 = pot.coeff_poly(0)
        if np.max(np.abs(c0)) > 1e-12:
            h0_bad[name] = float(np.max(np.abs(c0)))
    results["H0"] = HypothesisResult("H0", not h0_bad, h0_bad)

    # H1: sigma^2 bounded away from zero on an r-grid.
    rgrid = np.linspace(lo, hi, 257)
    s2 = sys.sigma_squared(rgrid)
    s2min = float(np.min(s2))
    results["H1"] = HypothesisResult(
        "H1", s2min > sigma_tol,
        {"min_sigma2": s2min, "argmin_r": float(rgrid[int(np.argmin(s2))])})

    # H2: structural for TrigPotential.
    results["H2"] = HypothesisResult("H2", True, {"degree": d})

    # H3: no common zeroes of v_1(., n), v_{-1}(., n) at integer r.
    h3_witness = {}
    h3_pass = True
    for n in range(int(np.ceil(lo)), int(np.floor(hi)) + 1):
        r1 = _theta_roots(lambda t: sys.v_plus.eval(t, n), d)
        r2 = _theta_roots(lambda t: sys.v_minus.eval(t, n), d)
        if len(r1) == 0 or len(r2) == 0:
            continue
        dist = min(_circ_dist(a, b) for a in r1 for b in r2)
        if dist < _MARGIN_FAIL:
            h3_pass = False
            h3_witness = {"r": n, "distance": dist}
            break
        if dist < _MARGIN_PASS:
            raise IllConditioned(
                f"H3 margin {dist:.3e} at r={n} inside tolerance band")
    results["H3"] = HypothesisResult("H3", h3_pass, h3_witness)

    # H4: no common periodic orbits of period q <= 2d.  A failure needs a
    # theta with  sum_k v_{-1}(theta + k/q, p/q) = 0  and
    # sum_k [v_{-1} - v_1]^2(theta + k/q, p/q) = 0.  The second sum
    # vanishes exactly when the zeros of h = v_{-1} - v_1 align along the
    # q-shift orbit, so candidate thetas come from aligning roots of h.
    h4_pass = True
    h4_witness = {}
    for p, q in _coprime_pairs(2 * d):
        rpq = p / q
        fsum = _period_sum(sys.v_minus, q, rpq)
        h = sys.v_minus - sys.v_plus

        def h_at(t, rpq=rpq, h=h):
            return h.eval(t, rpq)

        if h.is_zero(1e-14):
            cands = None  # second sum vanishes for every theta
        else:
            hroots = _theta_roots(h_at, h.degree)
            cands = []
            for t0 in hroots:
                base = (t0 - 1.0 / q) % 1.0
                shifts = [(base + k / q) % 1.0 for k in range(1, q + 1)]
                if all(abs(h_at(s)) < _MARGIN_FAIL * 10 for s in shifts):
                    cands.append(base)
        if cands is None:
            # need f nonvanishing everywhere
            if fsum.is_zero(1e-14):
                h4_pass, h4_witness = False, {"p": p, "q": q,
                                              "mode": "both sums vanish"}
                break
            froots = _theta_roots(lambda t: fsum.eval(t, rpq), fsum.degree)
            if len(froots) > 0:
                h4_pass, h4_witness = False, {
                    "p": p, "q": q, "theta": float(froots[0])}
                break
        else:
            for theta in cands:
                fval = abs(fsum.eval(theta, rpq)) if not fsum.is_zero(1e-14) \
                    else 0.0
                if fval < _MARGIN_FAIL:
                    h4_pass, h4_witness = False, {
                        "p": p, "q": q, "theta": float(theta)}
                    break
            if not h4_pass:
                break
    results["H4"] = HypothesisResult("H4", h4_pass, h4_witness)

    # H5: the resonant averages Ev_{p,q}(., p/q) have distinct
    # nondegenerate zeros.  For q > d no harmonic of Ev is resonant and
    # the condition is vacuous (the averaged system vanishes by design).
    h5_pass = True
    h5_witness = {}
    for p, q in _coprime_pairs(2 * d):
        ks = [k for k in range(1, d + 1) if k % q == 0]
        if not ks:
            continue
        rpq = p / q
        coeffs = {k: [sys.Ev.coeff(k, rpq)] for k in ks}
        g = TrigPotential(coeffs, degree=max(ks))
        if g.is_zero(1e-14):
            h5_pass, h5_witness = False, {"p": p, "q": q,
                                          "mode": "identically zero"}
            break
        gp = g.dtheta()
        roots = _theta_roots(lambda t: g.eval(t, rpq), g.degree)
        for i, t0 in enumerate(roots):
            margin = abs(gp.eval(t0, rpq))
            if margin <= _MARGIN_FAIL:
                h5_pass, h5_witness = False, {"p": p, "q": q,
                                              "theta": float(t0),
                                              "derivative": margin}
                break
            if margin < _MARGIN_PASS:
                raise IllConditioned(
                    f"H5 derivative margin {margin:.3e} at p/q={p}/{q} "
                    "inside tolerance band")
            for t1 in roots[:i]:
                if _circ_dist(t0, t1) < _MARGIN_FAIL:
                    h5_pass, h5_witness = False, {
                        "p": p, "q": q, "mode": "repeated root",
                        "theta": float(t0)}
                    break
            if not h5_pass:
                break
        if not h5_pass:
            break
    results["H5"] = HypothesisResult("H5", h5_pass, h5_witness)

    reduced = _is_reduced_case(sys)
    return HypothesisReport(results=results, reduced=reduced)


def _period_sum(pot, q, rpq):
    """sum_{k=1}^q pot(theta + k/q, .) as a TrigPotential.

    Only harmonics divisible by q survive, scaled by q.
    """
    coeffs = {}
    for k in range(0, pot.degree + 1):
        if k % q == 0:
            coeffs[k] = q * pot.coeff_poly(k)
    return TrigPotential(coeffs, degree=pot.degree)


def _is_reduced_case(sys):
    """Area-preserving standard-map special case: u_i = v_i, r-independent,
    and no second-order potential."""
    for upot, vpot in ((sys.u_plus, sys.v_plus), (sys.u_minus, sys.v_minus)):
        if upot.rdegree > 0 or vpot.rdegree > 0:
            return False
        if not (upot - vpot).is_zero(1e-14):
            return False
    return sys.w_plus.is_zero(1e-14) and sys.w_minus.is_zero(1e-14)
