import numpy as np
import pytest

from twistdiff.dynamics import MapSystem
from twistdiff.ensemble import (CHUNK, EnsembleSpec, ExitReport,
                                calibrate_lattice, exit_time_experiment,
                                hitting_probability, run_ensemble,
                                run_exit_batch, run_path_statistic,
                                table_callables, visit_census,
                                walk_calibration_experiment)
from twistdiff.errors import DegenerateVariance
from twistdiff.normal_form import NormalFormParams, build_normal_form
from twistdiff.potentials import SystemPotentials, TrigPotential
from twistdiff.systems import constant_w_potentials, cos_sin_system

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def integrable_system(eps=0.02):
    z = TrigPotential.zero()
    return MapSystem(SystemPotentials(z, z, z, z, z, z), eps=eps)


class TestEnsembleSpec:
    def test_horizon_from_s(self):
        assert EnsembleSpec(eps=0.02, s=1.0).horizon == 2500
        assert EnsembleSpec(eps=0.02, s=0.5).horizon == 1250

    def test_horizon_override(self):
        assert EnsembleSpec(eps=0.02, n_steps=77).horizon == 77

    @pytest.mark.parametrize("kw", [
        {"eps": 0.0}, {"eps": -0.1}, {"eps": 0.02, "samples": 0},
        {"eps": 0.02, "threads": 0},
    ])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            EnsembleSpec(**kw)


class TestRunEnsemble:
    def test_integrable_displacements_zero(self):
        spec = EnsembleSpec(eps=0.02, samples=64, seed=1, r0=GOLDEN,
                            n_steps=500)
        res = run_ensemble(integrable_system(), spec)
        assert np.all(res.displacements == 0.0)

    def test_integrable_rotation_angle(self):
        n = 300
        spec = EnsembleSpec(eps=0.02, samples=4, seed=1, theta0=0.0,
                            r0=GOLDEN, n_steps=n)
        res = run_ensemble(integrable_system(), spec)
        assert np.allclose(res.theta_final, (n * GOLDEN) % 1.0, atol=1e-9)

    def test_thread_count_is_bitwise_invisible(self):
        # sample count deliberately not a chunk multiple
        sysm = cos_sin_system(0.05)
        base = dict(eps=0.05, samples=CHUNK + 188, seed=3, r0=GOLDEN,
                    n_steps=300, record=True)
        a = run_ensemble(sysm, EnsembleSpec(threads=1, **base))
        b = run_ensemble(sysm, EnsembleSpec(threads=8, **base))
        assert np.array_equal(a.r_final, b.r_final)
        assert np.array_equal(a.theta_final, b.theta_final)
        assert np.array_equal(a.r_paths, b.r_paths)

    def test_seed_matters(self):
        sysm = cos_sin_system(0.05)
        r1 = run_ensemble(sysm, EnsembleSpec(eps=0.05, samples=32, seed=0,
                                             n_steps=100, r0=GOLDEN))
        r2 = run_ensemble(sysm, EnsembleSpec(eps=0.05, samples=32, seed=1,
                                             n_steps=100, r0=GOLDEN))
        assert not np.array_equal(r1.r_final, r2.r_final)

    def test_fixed_theta0_collapses_initial_spread(self):
        spec = EnsembleSpec(eps=0.02, samples=16, seed=0, theta0=0.25,
                            r0=GOLDEN, n_steps=1, record=True)
        res = run_ensemble(cos_sin_system(0.02), spec)
        # all trajectories see the same first kick, split only by omega
        assert len(np.unique(res.r_final)) == 2

    def test_path_statistic_matches_recorded(self):
        sysm = cos_sin_system(0.05)
        spec = EnsembleSpec(eps=0.05, samples=CHUNK + 50, seed=9, r0=GOLDEN,
                            n_steps=200, record=True)
        res = run_ensemble(sysm, spec)
        final = run_path_statistic(sysm, spec, lambda rp: rp[:, -1])
        maxes = run_path_statistic(sysm, spec, lambda rp: rp.max(axis=1))
        assert np.array_equal(final, res.r_final)
        assert np.array_equal(maxes, res.r_paths.max(axis=1))


class TestHittingProbability:
    def test_zero_drift_is_linear(self):
        f = lambda r: hitting_probability(r, 0.2, 0.8,
                                          lambda x: 0.0, lambda x: 0.3)
        for r in (0.25, 0.4, 0.55, 0.7):
            assert f(r) == pytest.approx((0.8 - r) / 0.6, abs=1e-10)

    def test_constant_drift_closed_form(self):
        # b = sigma^2 = 1 on [0, 1], start at 1/2:
        # P(hit 0 first) = (e^-1 - e^-2) / (1 - e^-2)
        val = hitting_probability(0.5, 0.0, 1.0, lambda x: 1.0,
                                  lambda x: 1.0)
        expect = (np.exp(-1.0) - np.exp(-2.0)) / (1.0 - np.exp(-2.0))
        assert val == pytest.approx(expect, abs=1e-10)

    def test_boundary_values(self):
        f = lambda r: hitting_probability(r, 0.0, 1.0, lambda x: 0.5,
                                          lambda x: 1.0)
        assert f(1e-9) == pytest.approx(1.0, abs=1e-6)
        assert f(1.0 - 1e-9) == pytest.approx(0.0, abs=1e-6)

    def test_degenerate_variance(self):
        with pytest.raises(DegenerateVariance):
            hitting_probability(0.5, 0.0, 1.0, lambda x: 0.1,
                                lambda x: max(0.0, x - 0.9))

    def test_start_outside_rejected(self):
        with pytest.raises(ValueError):
            hitting_probability(0.9, 0.2, 0.8, lambda x: 0.0, lambda x: 1.0)


class TestLattice:
    def test_zero_drift_equispaced(self):
        lat = calibrate_lattice(lambda x: 0.0, lambda x: 0.25, 0.3, 0.1, 5)
        assert np.allclose(np.diff(lat.nodes), 0.1, atol=1e-12)

    def test_positive_drift_shrinks_spacing(self):
        lat = calibrate_lattice(lambda x: 1.0, lambda x: 1.0, 0.0, 0.1, 6)
        gaps = np.diff(lat.nodes)
        assert np.all(np.diff(gaps) < 0.0)
        # first gap: spacing * m(0) = spacing
        assert gaps[0] == pytest.approx(0.1, abs=1e-12)

    def test_recursion_matches_manual(self):
        b, s2 = (lambda x: 0.5), (lambda x: 0.8)
        lat = calibrate_lattice(b, s2, 0.2, 0.05, 4)
        x = 0.2
        for node in lat.nodes:
            assert node == pytest.approx(x, abs=1e-12)
            x = x + 0.05 * np.exp(-(2 * 0.5 / 0.8) * x)


class TestExitReports:
    def test_wide_strip_all_final_time(self):
        sysm = cos_sin_system(0.05)
        spec = EnsembleSpec(eps=0.05, samples=32, seed=2, r0=GOLDEN,
                            n_steps=50)
        rep = run_exit_batch(sysm, spec, -10.0, 10.0, window=(1, 10))
        assert not rep.boundary_mask.any()
        assert np.isnan(rep.up_fraction)
        assert rep.outside_window_fraction == 1.0

    def test_exit_time_experiment_geometry(self):
        sysm = cos_sin_system(0.05)
        spec = EnsembleSpec(eps=0.05, samples=256, seed=4)
        rep = exit_time_experiment(sysm, spec, GOLDEN, gamma=0.81,
                                   delta=1e-3)
        half = 0.05 ** 0.81
        assert rep.lo == pytest.approx(GOLDEN - half)
        assert rep.hi == pytest.approx(GOLDEN + half)
        n_min, n_max = rep.window
        assert n_min < n_max
        # boundary exits really are eps-close to (or past) a boundary
        m = rep.boundary_mask
        assert m.any()
        lo_hit = m & (rep.side == -1)
        hi_hit = m & (rep.side == 1)
        assert np.all(rep.r_exit[lo_hit] <= rep.lo + 0.05 + 1e-12)
        assert np.all(rep.r_exit[hi_hit] >= rep.hi - 0.05 - 1e-12)

    def test_symmetric_dynamics_balanced_exits(self):
        sysm = cos_sin_system(0.05)
        spec = EnsembleSpec(eps=0.05, samples=2048, seed=6)
        rep = exit_time_experiment(sysm, spec, GOLDEN, gamma=0.81,
                                   delta=1e-3)
        assert abs(rep.up_fraction - 0.5) < 0.06


class TestWalkCalibration:
    def test_interior_probabilities_near_half_for_zero_drift(self):
        sysm = cos_sin_system(0.05)
        lat = calibrate_lattice(lambda x: 0.0, lambda x: 0.25, GOLDEN - 0.1,
                                0.1, 4)
        spec = EnsembleSpec(eps=0.05, samples=512, seed=3, n_steps=4000)
        probs, finals = walk_calibration_experiment(sysm, lat, spec)
        assert probs.shape == (2,)
        assert np.all((probs >= 0.0) & (probs <= 1.0))
        assert np.all(np.abs(probs - 0.5) < 0.1)
        assert np.all(finals < 0.2)


class TestCensusAndTables:
    def test_visit_census_counts(self):
        paths = np.array([[0.1, 0.2, 0.3], [0.1, 0.1, 0.9]])
        counts = visit_census(paths, [0.1, 0.9], tol=0.011)
        assert counts.tolist() == [3, 1]

    def test_table_callables_interpolate(self):
        params = NormalFormParams(beta=0.05, d=1)
        nf = build_normal_form(
            MapSystem(constant_w_potentials(0.3), eps=0.01), params)
        b, s2 = table_callables(nf)
        assert b(0.4) == pytest.approx(0.3, abs=1e-10)
        assert s2(0.4) == pytest.approx(0.5, abs=1e-10)
