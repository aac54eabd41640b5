"""Closed forms and built-in scenarios used as oracles everywhere else."""

import math

import numpy as np
import pytest

from steeplab import (
    ClosedForm,
    ConfigError,
    builtin,
    closed_form_eval,
    limit_candidates,
    volterra_residual,
)


class TestClosedFormValues:
    def test_v1_initial_condition(self):
        for w, th in ((1.2, 0.6), (2.0, 0.3)):
            cf = ClosedForm("v1", omega=w, u_theta=th)
            assert closed_form_eval(cf, 0.0) == pytest.approx(th)

    def test_v1_at_one(self):
        cf = ClosedForm("v1", omega=1.2, u_theta=0.6)
        assert closed_form_eval(cf, 1.0) == pytest.approx(1.2 - 0.6 * math.exp(-1.0))

    def test_z_beta_plateau_value(self):
        cf = ClosedForm("z_beta", omega=1.2, u_theta=0.6, beta=100)
        assert closed_form_eval(cf, 0.02) == pytest.approx(0.61)
        assert closed_form_eval(cf, 5.0) == pytest.approx(0.61)
        assert closed_form_eval(cf, 0.0) == pytest.approx(0.6)

    def test_q_beta_branches(self):
        cf = ClosedForm("q_beta", omega=1.2, u_theta=0.6, beta=100)
        assert closed_form_eval(cf, 0.02) == pytest.approx(-0.59)
        # value at the jump is the right limit; the jump is a declared knot
        left = 1.0 + 0.01 + 0.6 - 1.2
        assert closed_form_eval(cf, 0.01) == pytest.approx(-0.59)
        assert closed_form_eval(cf, 0.0099999) == pytest.approx(left, abs=1e-4)
        assert cf.breakpoints() == (0.01,)

    def test_q_infty_measure_zero_start(self):
        cf = ClosedForm("q_infty", omega=1.2, u_theta=0.6)
        assert closed_form_eval(cf, 0.0) == pytest.approx(0.4)
        assert closed_form_eval(cf, 2.5) == pytest.approx(-0.6)

    def test_parameter_validation(self):
        with pytest.raises(ConfigError):
            ClosedForm("z_beta", u_theta=0.6)  # beta missing
        with pytest.raises(ConfigError):
            ClosedForm("v9")


class TestClosedFormIdentities:
    def test_v1_v2_satisfy_their_branch_odes(self):
        rng = np.random.default_rng(11)
        t = rng.uniform(0.0, 5.0, size=100)
        v1 = ClosedForm("v1", omega=1.2, u_theta=0.6)
        v2 = ClosedForm("v2", u_theta=0.6)
        np.testing.assert_allclose(v1.derivative(t) + v1(t) - 1.2,
                                   np.zeros_like(t), atol=1e-12)
        np.testing.assert_allclose(v2.derivative(t) + v2(t),
                                   np.zeros_like(t), atol=1e-12)

    def test_ordering_between_branches(self):
        t = np.linspace(1e-9, 5.0, 500)
        v1 = ClosedForm("v1", omega=1.2, u_theta=0.6)(t)
        v2 = ClosedForm("v2", u_theta=0.6)(t)
        assert np.all(v2 < 0.6) and np.all(0.6 < v1)

    def test_z_beta_solves_threshold_advanced_model(self):
        sc = builtin("threshold-advanced")
        for beta in (10, 100, 10_000):
            z = ClosedForm("z_beta", omega=1.2, u_theta=0.6,
                           beta=beta).trajectory(5.0)
            res = volterra_residual(z, sc, beta)
            assert res.sup_residual <= 1e-8

    def test_z_beta_hugs_threshold_at_exactly_one_over_beta(self):
        for beta in (10, 1000, 12345):
            cf = ClosedForm("z_beta", omega=1.2, u_theta=0.6, beta=beta)
            t = np.linspace(0.0, 5.0, 4001)
            gap = np.max(np.abs(cf(t) - 0.6))
            assert gap == pytest.approx(1.0 / beta, rel=1e-12)


class TestBuiltins:
    def test_alt_subseq_parameters(self):
        sc = builtin("alt-subseq")
        p = sc.params
        assert (p.n, p.u_theta, p.t_end) == (1, 0.6, 5.0)
        assert p.omega[0, 0] == 1.2
        assert p.u_init[0] == 0.6
        assert sc.firing.kind == "shifted"

    def test_multi_solution_enforces_parameter_order(self):
        with pytest.raises(ConfigError):
            builtin("multi-solution", omega=0.5)
        with pytest.raises(ConfigError):
            builtin("multi-solution", u_theta=-0.1)

    def test_decay_is_uncoupled(self):
        sc = builtin("decay")
        assert np.all(sc.params.omega == 0.0)
        assert sc.source.bound() == 0.0
        assert sc.params.u_init[0] == 1.0

    def test_threshold_advanced_wiring(self):
        sc = builtin("threshold-advanced")
        assert sc.firing.kind == "pwl"
        assert sc.source.kind == "threshold-advanced"

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            builtin("nope")

    def test_overrides_propagate(self):
        sc = builtin("alt-subseq", omega=2.0, u_theta=0.5, t_end=3.0)
        assert sc.params.omega[0, 0] == 2.0
        assert sc.params.u_init[0] == 0.5
        assert sc.params.t_end == 3.0


class TestLimitCandidates:
    def test_multi_solution_registers_genuine_v3(self):
        names = [name for name, _ in limit_candidates(builtin("multi-solution"))]
        assert names == ["v1", "v2", "v3"]

    def test_threshold_advanced_gets_constant_label(self):
        names = [name for name, _ in limit_candidates(builtin("threshold-advanced"))]
        assert "const-u-theta" in names and "v3" not in names

    def test_decay_candidate_for_uncoupled_network(self):
        cands = dict(limit_candidates(builtin("decay")))
        assert "decay" in cands
        grid = np.linspace(0.0, 5.0, 11)
        np.testing.assert_allclose(cands["decay"].value(grid)[:, 0],
                                   np.exp(-grid), atol=1e-14)
