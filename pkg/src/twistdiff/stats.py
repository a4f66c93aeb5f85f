"""Statistical certification of the diffusive limit.

The end-of-horizon displacements r_n - r_0 over n = s eps^-2 steps are
tested against the limiting normal law with mean s b(r) and variance
s sigma^2(r); the martingale structure of the compensated test functions
is checked along recorded paths; and the plain weighted-Bernoulli CLT is
available as a model-free reference.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateVariance, InsufficientSamples, IOFailure

_MIN_SAMPLES = 1000
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CLTReport:
    n_samples: int
    mean: float
    var: float
    skew: float
    kurtosis: float  # excess
    ks: float
    ad: float  # Anderson-Darling A^2, secondary diagnostic
    ref_mean: float
    ref_var: float

    def to_dict(self):
        return asdict(self)


def ks_statistic(z):
    """Exact sup-distance of the empirical CDF from the standard normal."""
    z = np.sort(np.asarray(z, dtype=float))
    n = len(z)
    cdf = ndtr(z)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


def anderson_darling(z):
    """A^2 against the standard normal (no parameter estimation)."""
    z = np.sort(np.asarray(z, dtype=float))
    n = len(z)
    cdf = np.clip(ndtr(z), 1e-300, 1.0 - 1e-16)
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(cdf) + np.log1p(-cdf[::-1])))
    return float(-n - s / n)


def clt_test(displacements, ref_mean, ref_var) -> CLTReport:
    """Compare end-of-horizon displacements with N(ref_mean, ref_var)."""
    x = np.asarray(displacements, dtype=float)
    if len(x) < _MIN_SAMPLES:
        raise InsufficientSamples(
            f"need >= {_MIN_SAMPLES} samples, got {len(x)}")
    if ref_var <= 0.0:
        raise DegenerateVariance("reference variance must be positive")
    z = (x - ref_mean) / np.sqrt(ref_var)
    m = float(np.mean(x))
    v = float(np.var(x))
    zc = (x - m) / np.sqrt(v)
    return CLTReport(
        n_samples=len(x),
        mean=m,
        var=v,
        skew=float(np.mean(zc ** 3)),
        kurtosis=float(np.mean(zc ** 4) - 3.0),
        ks=ks_statistic(z),
        ad=anderson_darling(z),
        ref_mean=float(ref_mean),
        ref_var=float(ref_var),
    )


# ---------------------------------------------------------------------------
# Martingale residuals along recorded paths
# ---------------------------------------------------------------------------

def test_functions():
    """(f, f', f'') triples indexed by name, for compensator checks."""
    def bump(r):
        out = np.zeros_like(np.asarray(r, dtype=float))
        m = np.abs(r - 0.5) < 0.25
        x = (np.asarray(r)[m] - 0.5) / 0.25
        out[m] = np.exp(-1.0 / (1.0 - x * x) + 1.0)
        return out

    def bump1(r):
        h = 1e-5
        return (bump(np.asarray(r) + h) - bump(np.asarray(r) - h)) / (2 * h)

    def bump2(r):
        h = 1e-4
        r = np.asarray(r, dtype=float)
        return (bump(r + h) - 2.0 * bump(r) + bump(r - h)) / (h * h)

    one = lambda r: np.ones_like(np.asarray(r, dtype=float))
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return {
        "const": (one, zero, zero),
        "r": (lambda r: np.asarray(r, dtype=float), one, zero),
        "r2": (lambda r: np.asarray(r, dtype=float) ** 2,
               lambda r: 2.0 * np.asarray(r, dtype=float),
               lambda r: 2.0 * np.ones_like(np.asarray(r, dtype=float))),
        "r3": (lambda r: np.asarray(r, dtype=float) ** 3,
               lambda r: 3.0 * np.asarray(r, dtype=float) ** 2,
               lambda r: 6.0 * np.asarray(r, dtype=float)),
        "bump": (bump, bump1, bump2),
    }


@dataclass
class MartingaleReport:
    estimate: float        # ensemble mean of the residual
    std_error: float
    max_abs: float
    n_samples: int


def martingale_residual(r_paths, eps, f, fprime, fsecond,
                        b_func, sigma2_func) -> MartingaleReport:
    """eta = f(r_n) - f(r_0) - eps^2 sum_k [b f' + (sigma^2/2) f''](r_k).

    Under the diffusive limit eta is a centred martingale increment;
    its ensemble mean vanishes within Monte-Carlo error and the residual
    scale shrinks with eps.
    """
    r_paths = np.asarray(r_paths, dtype=float)
    body = r_paths[:, :-1]
    comp = (b_func(body) * fprime(body)
            + 0.5 * sigma2_func(body) * fsecond(body)).sum(axis=1)
    eta = f(r_paths[:, -1]) - f(r_paths[:, 0]) - eps * eps * comp
    m = float(np.mean(eta))
    se = float(np.std(eta, ddof=1) / np.sqrt(len(eta)))
    return MartingaleReport(m, se, float(np.max(np.abs(eta))), len(eta))


def martingale_experiment(sys, spec, triple, b_func, sigma2_func
                          ) -> MartingaleReport:
    """Run an ensemble and accumulate the martingale residual chunkwise,
    so arbitrarily long horizons fit in memory."""
    from .ensemble import run_path_statistic

    f, fprime, fsecond = triple
    eps = sys.eps

    def stat(rp):
        body = rp[:, :-1]
        comp = (b_func(body) * fprime(body)
                + 0.5 * sigma2_func(body) * fsecond(body)).sum(axis=1)
        return f(rp[:, -1]) - f(rp[:, 0]) - eps * eps * comp

    eta = run_path_statistic(sys, spec, stat)
    m = float(np.mean(eta))
    se = float(np.std(eta, ddof=1) / np.sqrt(len(eta)))
    return MartingaleReport(m, se, float(np.max(np.abs(eta))), len(eta))


# ---------------------------------------------------------------------------
# Weighted Bernoulli sums
# ---------------------------------------------------------------------------

def golden_weights(n):
    """v_k = cos(2 pi k g), g the golden mean; lim (1/n) sum v_k^2 = 1/2."""
    return np.cos(2.0 * np.pi * GOLDEN * np.arange(n))


def weighted_bernoulli_samples(weights, n_samples, seed=0, chunk=256):
    """M draws of S = sum_k v_k omega_k / sqrt(n), omega_k = +/-1 fair."""
    weights = np.asarray(weights, dtype=float)
    n = len(weights)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    out = np.empty(n_samples)
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        om = rng.integers(0, 2, size=(m, n)).astype(np.float64) * 2.0 - 1.0
        out[done:done + m] = om @ weights / np.sqrt(n)
        done += m
    return out


def weighted_bernoulli_clt(weights, n_samples, seed=0) -> CLTReport:
    weights = np.asarray(weights, dtype=float)
    sigma2 = float(np.mean(weights ** 2))
    samples = weighted_bernoulli_samples(weights, n_samples, seed)
    return clt_test(samples, 0.0, sigma2)


# ---------------------------------------------------------------------------
# Deterministic artifact emission
# ---------------------------------------------------------------------------

def emit_histogram(samples, path, bins=80, report: Optional[CLTReport] = None):
    """Write a CSV histogram plus a JSON sidecar of summary statistics.

    Output is a pure function of the inputs (no timestamps, fixed float
    formatting), so repeated runs produce byte-identical files.
    """
    samples = np.asarray(samples, dtype=float)
    counts, edges = np.histogram(samples, bins=bins)
    try:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["bin_left", "bin_right", "count"])
            for i in range(len(counts)):
                wr.writerow([f"{edges[i]:.12g}", f"{edges[i + 1]:.12g}",
                             int(counts[i])])
        side = {
            "n_samples": int(len(samples)),
            "mean": f"{np.mean(samples):.12g}",
            "var": f"{np.var(samples):.12g}",
        }
        if report is not None:
            side["report"] = {k: (f"{v:.12g}" if isinstance(v, float) else v)
                              for k, v in report.to_dict().items()}
        with open(str(path) + ".json", "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IOFailure(f"could not write histogram to {path}: {exc}")
