"""Batched Monte-Carlo driver for the random twist map.

Determinism contract: every trajectory owns a private RNG stream keyed
by (master seed, trajectory index), work is split into fixed-size chunks
independent of the thread count, and each chunk writes into its own
index-ordered output slice.  Results are therefore byte-identical for
any number of worker threads and either kernel backend's chunking.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .errors import DegenerateVariance, NonFiniteState

CHUNK = 512  # fixed: never derived from the thread count


@dataclass(frozen=True)
class EnsembleSpec:
    """What to run: horizon n = round(s * eps^-2) unless given explicitly."""

    eps: float
    s: float = 1.0
    samples: int = 10000
    seed: int = 0
    theta0: Optional[float] = None  # None: uniform per trajectory
    r0: float = 0.5
    record: bool = False
    threads: int = 1
    backend: Optional[str] = None
    n_steps: Optional[int] = None

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def horizon(self):
        if self.n_steps is not None:
            return int(self.n_steps)
        return int(round(self.s * self.eps ** -2))


@dataclass
class EnsembleResult:
    spec: EnsembleSpec
    theta_final: np.ndarray
    r_final: np.ndarray
    r_paths: Optional[np.ndarray] = None

    @property
    def displacements(self):
        return self.r_final - self.spec.r0


def _chunk_inputs(spec: EnsembleSpec, start, count, n):
    """Initial data and symbol words for trajectories [start, start+count).

    Each trajectory's draws come from its own SeedSequence(seed, index)
    stream, in a fixed order (theta0 first, then the word), so the result
    does not depend on how trajectories are grouped into chunks.
    """
    theta0 = np.empty(count)
    omegas = np.empty((count, n), dtype=np.int8)
    for i in range(count):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([spec.seed, start + i])))
        theta0[i] = rng.random() if spec.theta0 is None else spec.theta0
        omegas[i] = rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1
    r0 = np.full(count, spec.r0)
    return theta0, r0, omegas


def run_ensemble(sys, spec: EnsembleSpec) -> EnsembleResult:
    """Iterate `samples` independent trajectories for the full horizon."""
    pots = _kernels.system_arrays(sys.potentials)
    n = spec.horizon
    M = spec.samples
    theta_fin = np.empty(M)
    r_fin = np.empty(M)
    r_paths = np.empty((M, n + 1)) if spec.record else None

    def work(c):
        start = c * CHUNK
        count = min(CHUNK, M - start)
        th0, r0, om = _chunk_inputs(spec, start, count, n)
        tf, rf, rp = _kernels.run_paths(pots, sys.eps, th0, r0, om,
                                        record=spec.record,
                                        backend=spec.backend)
        sl = slice(start, start + count)
        theta_fin[sl] = tf
        r_fin[sl] = rf
        if spec.record:
            r_paths[sl] = rp

    chunks = range(ceil(M / CHUNK))
    if spec.threads == 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            list(pool.map(work, chunks))
    if not (np.all(np.isfinite(theta_fin)) and np.all(np.isfinite(r_fin))):
        bad = int(np.flatnonzero(~np.isfinite(r_fin))[0])
        raise NonFiniteState("non-finite state in batch", trajectory=bad)
    return EnsembleResult(spec, theta_fin, r_fin, r_paths)


def run_path_statistic(sys, spec: EnsembleSpec, stat_fn):
    """Per-trajectory statistic of the recorded action path, chunked.

    ``stat_fn(r_paths)`` maps a (chunk, n+1) block of action paths to one
    value per trajectory; paths are discarded after each chunk, so the
    memory footprint stays at one chunk regardless of the horizon.
    Results are written index-ordered (same determinism contract as
    :func:`run_ensemble`).
    """
    pots = _kernels.system_arrays(sys.potentials)
    n = spec.horizon
    M = spec.samples
    out = np.empty(M)

    def work(c):
        start = c * CHUNK
        count = min(CHUNK, M - start)
        th0, r0, om = _chunk_inputs(spec, start, count, n)
        _, _, rp = _kernels.run_paths(pots, sys.eps, th0, r0, om,
                                      record=True, backend=spec.backend)
        out[start:start + count] = stat_fn(rp)

    chunks = range(ceil(M / CHUNK))
    if spec.threads == 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            list(pool.map(work, chunks))
    return out


# ---------------------------------------------------------------------------
# Exit-time experiments
# ---------------------------------------------------------------------------

@dataclass
class ExitReport:
    """Stopping times at the eps-closeness boundaries of an action window."""

    lo: float
    hi: float
    exit_idx: np.ndarray   # steps taken; = word length for final-time exits
    side: np.ndarray       # -1 lower, +1 upper, 0 final-time
    theta_exit: np.ndarray
    r_exit: np.ndarray
    window: Optional[tuple] = None  # (n_min, n_max) admissible step window

    @property
    def boundary_mask(self):
        return self.side != 0

    @property
    def up_fraction(self):
        m = self.boundary_mask
        if not np.any(m):
            return float("nan")
        return float(np.mean(self.side[m] == 1))

    @property
    def outside_window_fraction(self):
        """Fraction of all runs whose stopping time misses the window
        (final-time exits count as outside)."""
        if self.window is None:
            raise ValueError("no reference window attached")
        n_min, n_max = self.window
        ok = self.boundary_mask & (self.exit_idx >= n_min) \
            & (self.exit_idx <= n_max)
        return float(1.0 - np.mean(ok))


def run_exit_batch(sys, spec: EnsembleSpec, lo, hi, close_tol=None,
                   window=None) -> ExitReport:
    """Run until the action is eps-close to (or past) lo or hi."""
    pots = _kernels.system_arrays(sys.potentials)
    tol = sys.eps if close_tol is None else close_tol
    n = spec.horizon
    M = spec.samples
    exit_idx = np.empty(M, dtype=np.int64)
    side = np.empty(M, dtype=np.int8)
    theta_exit = np.empty(M)
    r_exit = np.empty(M)

    def work(c):
        start = c * CHUNK
        count = min(CHUNK, M - start)
        th0, r0, om = _chunk_inputs(spec, start, count, n)
        ei, sd, te, re = _kernels.run_exits(pots, sys.eps, th0, r0, om,
                                            lo, hi, tol,
                                            backend=spec.backend)
        sl = slice(start, start + count)
        exit_idx[sl] = ei
        side[sl] = sd
        theta_exit[sl] = te
        r_exit[sl] = re

    chunks = range(ceil(M / CHUNK))
    if spec.threads == 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            list(pool.map(work, chunks))
    return ExitReport(lo, hi, exit_idx, side, theta_exit, r_exit, window)


def exit_time_experiment(sys, spec: EnsembleSpec, center, gamma, delta):
    """Exits from [c - eps^gamma, c + eps^gamma] started at the center.

    The reference window for the stopping time is
    [eps^(-2(1-gamma)+delta), eps^(-2(1-gamma)-delta)]; the word length
    is twice the upper end so late exits are observable.
    """
    eps = sys.eps
    half = eps ** gamma
    n_min = eps ** (-2.0 * (1.0 - gamma) + delta)
    n_max = eps ** (-2.0 * (1.0 - gamma) - delta)
    horizon = int(ceil(2.0 * n_max))
    spec = _replace_spec(spec, r0=float(center), n_steps=horizon)
    return run_exit_batch(sys, spec, center - half, center + half,
                          window=(n_min, n_max))


def _replace_spec(spec, **kw):
    from dataclasses import replace
    return replace(spec, **kw)


# ---------------------------------------------------------------------------
# The effective one-dimensional diffusion: hitting probabilities and the
# balanced random-walk lattice
# ---------------------------------------------------------------------------

def _speed_measure(b_func, sigma2_func):
    def m(rho):
        val, _ = quad(lambda x: 2.0 * b_func(x) / sigma2_func(x), 0.0, rho,
                      epsabs=1e-13, epsrel=1e-13, limit=200)
        return np.exp(-val)
    return m


def hitting_probability(r, left, right, b_func, sigma2_func):
    """Solve  b f' + (sigma^2/2) f'' = 0,  f(left) = 0, f(right) = 1
    for the hitting point of a diffusion started at r, via the classical
    quadrature

        f(r) = int_r^right m / int_left^right m,
        m(rho) = exp(-int_0^rho 2 b / sigma^2).

    As displayed this is the probability of reaching the *left* boundary
    first (it is 1 at r = left and 0 at r = right); the complement gives
    the upward probability.  Verified against direct Monte Carlo.
    """
    if not left < r < right:
        raise ValueError("need left < r < right")
    for x in np.linspace(left, right, 33):
        if sigma2_func(x) <= 1e-14:
            raise DegenerateVariance(f"sigma^2 vanishes near r = {x:.6g}")
    m = _speed_measure(b_func, sigma2_func)
    top, _ = quad(m, r, right, epsabs=1e-13, epsrel=1e-13, limit=200)
    bot, _ = quad(m, left, right, epsabs=1e-13, epsrel=1e-13, limit=200)
    return top / bot


@dataclass
class WalkLattice:
    """Action lattice on which the diffusion is a balanced +/-1 walk."""

    nodes: np.ndarray
    spacing: float

    def __len__(self):
        return len(self.nodes)


def calibrate_lattice(b_func, sigma2_func, r_start, spacing, n_nodes):
    """Nodes A_j with A_0 = r_start and
    A_j = A_{j-1} + spacing * exp(-int_0^{A_{j-1}} 2 b / sigma^2),
    so neighbouring hitting probabilities are 1/2 + O(spacing).
    Zero drift gives an equispaced lattice.
    """
    m = _speed_measure(b_func, sigma2_func)
    nodes = [float(r_start)]
    for _ in range(n_nodes - 1):
        nodes.append(nodes[-1] + spacing * m(nodes[-1]))
    return WalkLattice(np.asarray(nodes), float(spacing))


def walk_calibration_experiment(sys, lattice: WalkLattice,
                                spec: EnsembleSpec, close_tol=None):
    """Measured up-move probability at each interior lattice node.

    From node j the dynamics runs until it is eps-close to node j-1 or
    j+1; the report lists, per node, the fraction of boundary exits that
    went up.  Final-time exits are excluded from the fraction and
    reported separately.
    """
    probs = []
    final_fracs = []
    for j in range(1, len(lattice) - 1):
        node_spec = _replace_spec(
            spec, r0=float(lattice.nodes[j]),
            seed=spec.seed + j)  # independent streams per node
        rep = run_exit_batch(sys, node_spec, float(lattice.nodes[j - 1]),
                             float(lattice.nodes[j + 1]), close_tol)
        probs.append(rep.up_fraction)
        final_fracs.append(float(np.mean(~rep.boundary_mask)))
    return np.asarray(probs), np.asarray(final_fracs)


def visit_census(r_paths, nodes, tol):
    """Per-node counts of path points within tol of each lattice node."""
    nodes = np.asarray(nodes, dtype=float)
    out = np.empty(len(nodes), dtype=np.int64)
    for j, c in enumerate(nodes):
        out[j] = int(np.count_nonzero(np.abs(r_paths - c) <= tol))
    return out


def table_callables(nf_data):
    """(b, sigma^2) callables interpolating a normal-form table."""
    r = nf_data.r_grid

    def b_func(x):
        return np.interp(x, r, nf_data.b_values)

    def s2_func(x):
        return np.interp(x, r, nf_data.sigma2_values)

    return b_func, s2_func
