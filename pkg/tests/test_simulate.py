"""Reflected-diffusion engine: stepping, first passage, ergodic statistics."""

import math

import numpy as np
import pytest

from oupinball.geometry import Ball, DomainSpec, Hypercube, Shell
from oupinball import simulate as sim
from oupinball import special_functions as sf


class TestStep:
    def test_identity_without_noise_or_drift(self):
        spec = DomainSpec(2, 1e-12, None)  # lam ~ 0 within the dt guard
        out = sim.step(np.array([1.0, 2.0]), spec, 1e-3, np.zeros(2))
        assert np.allclose(out.state, [1.0, 2.0], atol=1e-14)
        assert not out.contacted

    def test_drift_only(self):
        spec = DomainSpec(2, 1.0, None)
        out = sim.step(np.array([10.0, 0.0]), spec, 1e-3, np.zeros(2))
        assert np.allclose(out.state, [9.99, 0.0])

    def test_projection_on_contact(self):
        spec = DomainSpec(2, 1.0, Ball((0.0, 0.0), 1.0))
        # proposal drifts into the ball; the step must push it back out
        state = np.array([1.0005, 0.0])
        out = sim.step(state, spec, 1e-3, np.zeros(2))
        assert out.contacted
        assert np.allclose(out.state, [1.0, 0.0])
        assert out.displacement == pytest.approx(1.0 - 1.0005 * (1 - 1e-3), rel=1e-9)


class TestExitInterval:
    def test_theta_zero_is_exactly_one(self):
        times, cens = sim.exit_interval_ou_1d(1.0, 1.0, 1e-3, 2000, seed=3)
        res = sim.empirical_exp_moment(times, 0.0, cens, 60.0)
        assert res.estimate == 1.0
        assert res.stderr == 0.0

    def test_seed_determinism(self):
        a, ca = sim.exit_interval_ou_1d(1.0, 1.0, 1e-3, 5000, seed=11)
        b, cb = sim.exit_interval_ou_1d(1.0, 1.0, 1e-3, 5000, seed=11)
        assert np.array_equal(a, b, equal_nan=True)
        assert np.array_equal(ca, cb)

    def test_matches_transform(self):
        times, cens = sim.exit_interval_ou_1d(1.0, 1.0, 1e-3, 30000, seed=5)
        for theta in (0.5, 1.0, 2.0):
            res = sim.empirical_exp_moment(times, -theta, cens, 60.0)
            exact = sf.ou_exit_laplace(theta, 1.0, 1.0)
            assert abs(res.estimate - exact) <= 3.0 * res.stderr

    def test_small_stiffness_matches_brownian(self):
        lam = 0.01
        times, cens = sim.exit_interval_ou_1d(lam, 1.0, 5e-4, 30000, seed=8,
                                              horizon=400.0)
        theta = 0.5
        res = sim.empirical_exp_moment(times, theta, cens, 400.0)
        bm = sf.brownian_exit_moment(theta, 1.0)
        # O(lam) model error on top of the Monte Carlo band
        assert abs(res.estimate - bm) <= 3.0 * res.stderr + 10.0 * lam * bm


class TestHitTime:
    def test_whole_domain_hits_at_zero(self):
        spec = DomainSpec(2, 1.0, None)
        cfg = sim.SimConfig(spec, 1e-3, 1.0, 2, 64)
        stats = sim.hit_time(cfg, lambda X: np.ones(len(X), dtype=bool))
        assert np.all(stats.hit_time == 0.0)
        assert not np.any(stats.censored)

    def test_halfspace_kernel_ks_against_density(self):
        spec = DomainSpec(2, 1.0, None)
        cfg = sim.SimConfig(spec, 1e-3, 40.0, 11, 20000, start=(-1.0, 0.0))
        stats = sim.hit_time(cfg, ("halfspace", 0, 0.0))
        ts = np.sort(stats.hit_time[~stats.censored])
        F = sf.ou_hitting_cdf(ts, 1.0)
        n = len(ts)
        emp_hi = np.arange(1, n + 1) / n
        emp_lo = np.arange(0, n) / n
        ks = max(np.max(emp_hi - F), np.max(F - emp_lo))
        assert ks < 1.628 / math.sqrt(n)

    def test_all_censored_warns(self):
        spec = DomainSpec(2, 1.0, None)
        cfg = sim.SimConfig(spec, 1e-3, 0.05, 4, 16, start=(-8.0, 0.0))
        with pytest.warns(UserWarning, match="censored"):
            sim.hit_time(cfg, ("halfspace", 0, 8.0))

    def test_shadow_trapping_trend(self):
        # mean sideways exit time behind a cube grows with lam r^2
        means = []
        for lam in (0.5, 1.0, 2.0):
            spec = DomainSpec(2, lam, Hypercube((4.0, 0.0), 1.0))
            cfg = sim.SimConfig(spec, 0.005 / lam, 60.0 / lam, 17, 256,
                                start=(5.0, 0.0))
            stats = sim.hit_time(cfg, lambda X: np.abs(X[:, 1]) >= 1.0)
            t = np.where(stats.censored, 60.0 / lam, stats.hit_time)
            means.append(lam * np.mean(t))  # in units of the relaxation time
        assert means[0] < means[1] < means[2]


class TestExpMoment:
    def test_divergence_flag_on_heavy_tail(self):
        g = np.random.default_rng(0)
        t = g.pareto(0.7, size=4096) + 1.0  # infinite exponential moments
        res = sim.empirical_exp_moment(t, 1.0, np.zeros(len(t), bool), None)
        assert res.divergence_flag

    def test_stable_below_threshold(self):
        times, cens = sim.exit_interval_ou_1d(1.0, 1.0, 1e-3, 20000, seed=21)
        thr = sf.exit_moment_threshold(1.0, 1.0)
        res = sim.empirical_exp_moment(times, 0.5 * thr.beta_star, cens, 60.0)
        assert not res.divergence_flag
        assert math.isfinite(res.estimate)

    def test_log_domain_guard(self):
        t = np.array([500.0, 600.0, 700.0, 800.0])
        res = sim.empirical_exp_moment(t, 2.0, np.zeros(4, bool), None)
        assert res.estimate == math.inf
        assert math.isfinite(res.log_estimate)

    def test_censored_contribution(self):
        t = np.array([1.0, np.nan])
        res = sim.empirical_exp_moment(t, 1.0, np.array([False, True]), 2.0)
        assert res.estimate == pytest.approx((math.e + math.e ** 2) / 2)
        assert res.censored_fraction == 0.5


class TestOccupation:
    def test_gaussian_baseline_passes(self):
        cfg = sim.SimConfig(DomainSpec(2, 1.0, None), 0.005, 60.0, 3, 512)
        out = sim.occupation_test(cfg)
        assert out["pass"] and out["p_value"] > 0.001

    def test_centered_ball_passes_and_avoids_obstacle(self):
        spec = DomainSpec(2, 1.0, Ball((0.0, 0.0), 1.0))
        cfg = sim.SimConfig(spec, 0.005, 60.0, 5, 512, start=(2.0, 0.0))
        out = sim.occupation_test(cfg)
        assert out["pass"]
        stats = sim.run_paths(cfg)
        assert stats.min_signed_distance >= -cfg.reflection_tol

    def test_far_ball_region_mass(self):
        from scipy.stats import ncx2
        spec = DomainSpec(2, 1.0, Ball((5.0, 0.0), 1.0))
        cfg = sim.SimConfig(spec, 0.005, 80.0, 7, 384)
        frac, se, _ = sim.region_occupancy(
            cfg, lambda X: np.linalg.norm(X, axis=1) < 1.0, None)
        # exact mass of {|x| < 1} under the restricted Gaussian
        dom_mass = ncx2.sf(2.0, 2, 50.0)  # Gaussian mass of the domain
        expected = (1 - math.exp(-1.0)) / dom_mass
        assert abs(frac - expected) <= 3.0 * se

    def test_requires_exact_case(self):
        spec = DomainSpec(2, 1.0, Ball((5.0, 0.0), 1.0))
        cfg = sim.SimConfig(spec, 0.005, 60.0, 5, 64)
        with pytest.raises(ValueError):
            sim.occupation_test(cfg)


class TestPathwiseInvariants:
    def test_domain_invariant_and_determinism(self):
        spec = DomainSpec(2, 1.0, Ball((0.0, 0.0), 1.0))
        cfg = sim.SimConfig(spec, 0.005, 10.0, 13, 256, start=(2.0, 0.0))
        a = sim.run_paths(cfg)
        b = sim.run_paths(cfg)
        assert a.min_signed_distance >= -cfg.reflection_tol
        assert np.array_equal(a.final_state, b.final_state)
        assert np.array_equal(a.contacts, b.contacts)
        assert np.array_equal(a.displacement, b.displacement)

    def test_no_contact_away_from_obstacle(self):
        # short horizon far from the obstacle: the local-time proxy stays zero
        spec = DomainSpec(2, 1.0, Ball((8.0, 0.0), 0.5))
        cfg = sim.SimConfig(spec, 0.005, 2.0, 19, 128)
        stats = sim.run_paths(cfg)
        assert np.all(stats.contacts == 0)
        assert np.all(stats.displacement == 0.0)

    def test_weak_dt_refinement(self):
        # halving dt moves E|X_T|^2 by O(dt)
        spec = DomainSpec(2, 1.0, Ball((0.0, 0.0), 1.0))
        vals = {}
        for dt in (0.008, 0.004):
            cfg = sim.SimConfig(spec, dt, 4.0, 23, 4096, start=(2.0, 0.0))
            stats = sim.run_paths(cfg)
            vals[dt] = np.mean(np.sum(stats.final_state ** 2, axis=1))
        assert abs(vals[0.008] - vals[0.004]) < 40.0 * 0.008 + 0.05


class TestRotation:
    def _shell_spec(self, a=6.0, r=1.0, q=3.0):
        return DomainSpec(2, 1.0, Shell((a, 0.0), r, r + q))

    def test_angle_endpoints(self):
        spec = self._shell_spec()
        assert sim.rotation_angle(np.array([7.0, 0.0]), (6.0, 0.0)) == 0.0
        assert sim.rotation_angle(np.array([3.5, 0.0]), (6.0, 0.0)) == pytest.approx(math.pi)

    def test_marker_hits_and_moment_stability(self):
        spec = self._shell_spec()
        cfg = sim.SimConfig(spec, 0.01, 80.0, 29, 1024)
        stats = sim.marker_hit_times(cfg)
        assert np.mean(~stats.censored) > 0.9
        theta_max = 1.0 / (32.0 * (1.0 + 3.0) ** 2)
        res = sim.empirical_exp_moment(stats.hit_time, 0.5 * theta_max,
                                       stats.censored, 80.0)
        assert math.isfinite(res.estimate)
        assert not res.divergence_flag

    def test_comparison_diagnostic_runs(self):
        spec = self._shell_spec()
        cfg = sim.SimConfig(spec, 0.01, 4.0, 31, 256)
        out = sim.rotation_comparison_pvalue(cfg, t_check=2.0)
        print(f"FINDING (diagnostic): winding dominance d+ = {out['d_plus']:.4f}, "
              f"p = {out['p_value_dominance_violation']:.3g}")
        assert 0.0 <= out["d_plus"] <= 1.0

    def test_rejects_non_shell(self):
        cfg = sim.SimConfig(DomainSpec(2, 1.0, None), 0.01, 10.0, 3, 8)
        with pytest.raises(ValueError):
            sim.marker_hit_times(cfg)


class TestConfigValidation:
    def test_dt_guard(self):
        with pytest.raises(ValueError):
            sim.SimConfig(DomainSpec(2, 4.0, None), 0.004, 1.0, 0, 8)

    def test_step_budget(self):
        with pytest.raises(ValueError):
            sim.SimConfig(DomainSpec(2, 1.0, None), 1e-8, 100.0, 0, 8)

    def test_csv_rows(self):
        cfg = sim.SimConfig(DomainSpec(2, 1.0, None), 0.01, 0.5, 1, 4)
        stats = sim.run_paths(cfg)
        header, rows = stats.to_csv_rows()
        assert header == ["path", "hit_time", "censored", "contacts",
                          "displacement_sum"]
        assert len(rows) == 4
