"""Threshold diagnostics, Volterra residuals, distances, and sweeps."""

import math

import numpy as np
import pytest

from steeplab import (
    ClosedForm,
    ConfigError,
    builtin,
    integrate,
    m_min,
    p_measure,
    r_measure,
    sup_distance,
    sweep,
    threshold_diagnostics,
    volterra_residual,
)
from steeplab import analysis
from steeplab.errors import IntegrationError

V1 = ClosedForm("v1", omega=1.2, u_theta=0.6).trajectory(5.0)
V2 = ClosedForm("v2", u_theta=0.6).trajectory(5.0)
V3 = ClosedForm("v3", u_theta=0.6).trajectory(5.0)


class TestPointwiseDistance:
    def test_constant_at_threshold(self):
        assert m_min(V3, 2.0, 0.6) == 0.0

    def test_constant_offset(self):
        one_above = ClosedForm("v3", u_theta=1.6).trajectory(5.0)
        assert m_min(one_above, 2.0, 0.6) == pytest.approx(1.0)

    def test_v1_at_one(self):
        expected = 0.6 * (1.0 - math.exp(-1.0))
        assert m_min(V1, 1.0, 0.6) == pytest.approx(expected, abs=1e-12)


class TestMeasures:
    def test_partition_adds_up(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            delta = float(10 ** rng.uniform(-4, -0.5))
            t = float(rng.uniform(0.5, 5.0))
            cell = t / 10_000
            p = p_measure(V1, 0.6, delta, t)
            r = r_measure(V1, 0.6, delta, t)
            assert abs(p + r - t) <= 2 * cell

    def test_containment_in_delta(self):
        t = 4.0
        deltas = [0.3, 0.1, 0.03, 0.01]
        rs = [r_measure(V1, 0.6, d, t) for d in deltas]
        ps = [p_measure(V1, 0.6, d, t) for d in deltas]
        assert all(a >= b - 1e-12 for a, b in zip(rs, rs[1:]))
        assert all(a <= b + 1e-12 for a, b in zip(ps, ps[1:]))

    def test_v1_near_threshold_time_closed_form(self):
        # |v1(s) - u_theta| <= delta exactly on [0, -ln(1 - delta/0.6)]
        for delta in (0.06, 0.006, 0.0006):
            expected = -math.log(1.0 - delta / 0.6)
            got = r_measure(V1, 0.6, delta, 5.0)
            assert abs(got - expected) <= 2 * (5.0 / 10_000)

    def test_threshold_simple_tail_vanishes(self):
        cell = 5.0 / 10_000
        for traj in (V1, V2):
            assert r_measure(traj, 0.6, 1e-7, 5.0) <= 2 * cell

    def test_validation(self):
        with pytest.raises(ConfigError):
            r_measure(V1, 0.6, -0.1, 5.0)


class TestDiagnostics:
    def test_stationary_is_threshold_advanced_with_full_measure(self):
        diag = threshold_diagnostics(V3, 0.6)
        assert diag.classification == "threshold-advanced"
        assert diag.z_measure == 5.0
        assert diag.crossing_count == "plateau"

    def test_v1_is_extra_threshold_simple(self):
        diag = threshold_diagnostics(V1, 0.6)
        assert diag.classification == "extra-threshold-simple"
        assert diag.crossing_count == 0  # nothing in (0, T]
        assert diag.z_measure <= diag.resolution

    def test_r_curve_matches_inverted_closed_form(self):
        diag = threshold_diagnostics(V1, 0.6, deltas=(0.06, 0.006, 0.0006))
        for delta, measured in diag.r_curve:
            expected = -math.log(1.0 - delta / 0.6)
            assert abs(measured - expected) <= 2 * diag.resolution

    def test_coarse_grid_is_never_silent(self):
        traj = integrate(builtin("alt-subseq"), 10**7)
        diag = threshold_diagnostics(traj, 0.6)
        assert diag.classification == "undetermined"
        assert diag.warnings

    def test_grid_and_delta_validation(self):
        with pytest.raises(ConfigError):
            threshold_diagnostics(V1, 0.6, grid_n=10)
        with pytest.raises(ConfigError):
            threshold_diagnostics(V1, 0.6, deltas=(0.01, 0.1))


class TestVolterraResidual:
    def test_limit_candidates_of_multi_solution(self):
        sc = builtin("multi-solution")
        assert volterra_residual(V1, sc, math.inf).sup_residual <= 1e-6
        assert volterra_residual(V2, sc, math.inf).sup_residual <= 1e-6
        assert volterra_residual(V3, sc, math.inf).sup_residual <= 1e-6

    def test_threshold_advanced_limit_fails_by_half_omega_t(self):
        sc = builtin("threshold-advanced")
        res = volterra_residual(V3, sc, math.inf)
        assert res.sup_residual == pytest.approx(3.0, abs=1e-6)
        expected = 0.6 * res.curve[:, 0]
        np.testing.assert_allclose(res.curve[:, 1], expected, atol=1e-6)

    def test_self_consistency_of_numerical_solutions(self):
        for name in ("decay", "alt-subseq", "threshold-advanced"):
            sc = builtin(name)
            for beta in (10, 10**3, 10**6):
                traj = integrate(sc, beta)
                res = volterra_residual(traj, sc, beta)
                assert res.sup_residual <= 1e-6, (name, beta)

    def test_short_trajectory_rejected(self):
        short = ClosedForm("v1", omega=1.2, u_theta=0.6).trajectory(2.0)
        with pytest.raises(ConfigError):
            volterra_residual(short, builtin("multi-solution"), math.inf)

    def test_quad_n_validated(self):
        with pytest.raises(ConfigError):
            volterra_residual(V1, builtin("multi-solution"), math.inf, quad_n=10)


class TestSupDistance:
    def test_identical(self):
        assert sup_distance(V1, V1) == 0.0

    def test_v1_v2_gap_closed_form(self):
        expected = 1.2 * (1.0 - math.exp(-5.0))
        assert sup_distance(V1, V2) == pytest.approx(expected, abs=1e-9)

    def test_metric_axioms_on_shared_grid(self):
        a, b, c = V1, V2, V3
        assert sup_distance(a, b) == sup_distance(b, a)
        assert sup_distance(a, c) <= sup_distance(a, b) + sup_distance(b, c) + 1e-15

    def test_dimension_mismatch(self):
        two = ClosedForm("v1", omega=1.2, u_theta=0.6).trajectory(5.0)
        from steeplab.trajectory import FunctionTrajectory

        wide = FunctionTrajectory(lambda t: np.zeros((t.size, 2)),
                                  lambda t: np.zeros((t.size, 2)), n=2, t_end=5.0)
        with pytest.raises(ConfigError):
            sup_distance(two, wide)


class TestSweep:
    def test_parity_split_two_clusters(self):
        report = sweep(builtin("alt-subseq"),
                       [10**6, 10**6 + 1, 10**7, 10**7 + 1])
        assert len(report.clusters) == 2
        matches = {c.match: c.betas for c in report.clusters}
        assert set(matches) == {"v1", "v2"}
        assert matches["v1"] == (10**6, 10**7)
        assert matches["v2"] == (10**6 + 1, 10**7 + 1)
        assert report.entire_sequence_converges is False
        assert not report.warnings

    def test_uncoupled_network_converges(self):
        report = sweep(builtin("decay"), [10, 100, 1000])
        assert len(report.clusters) == 1
        assert report.clusters[0].match == "decay"
        assert report.entire_sequence_converges is True
        assert report.margin > 0

    def test_threshold_advanced_limit_is_constant(self):
        report = sweep(builtin("threshold-advanced"), [100, 1000, 10000])
        assert len(report.clusters) == 1
        assert report.clusters[0].match == "const-u-theta"
        assert report.clusters[0].match_distance <= 1e-4 + 1e-8

    def test_failures_recorded_and_sweep_continues(self, monkeypatch):
        real = analysis.integrate

        def flaky(scenario, beta, rel_tol, abs_tol):
            if beta == 100:
                raise IntegrationError("boom")
            return real(scenario, beta, rel_tol, abs_tol)

        monkeypatch.setattr(analysis, "integrate", flaky)
        report = sweep(builtin("decay"), [10, 100, 1000])
        assert 100 in report.failures and "boom" in report.failures[100]
        assert sorted(report.trajectories) == [10, 1000]
        assert report.entire_sequence_converges is False

    def test_distance_matrix_symmetry(self):
        report = sweep(builtin("decay"), [10, 100])
        d = report.distance_matrix
        np.testing.assert_array_equal(d, d.T)
        assert np.all(np.diag(d) == 0.0)

    def test_parallel_sweep_matches_serial(self):
        serial = sweep(builtin("decay"), [10, 100, 1000])
        threaded = sweep(builtin("decay"), [10, 100, 1000], max_workers=3)
        np.testing.assert_array_equal(serial.distance_matrix,
                                      threaded.distance_matrix)
        assert [c.betas for c in serial.clusters] == [
            c.betas for c in threaded.clusters
        ]

    def test_empty_betas_rejected(self):
        with pytest.raises(ConfigError):
            sweep(builtin("decay"), [])
