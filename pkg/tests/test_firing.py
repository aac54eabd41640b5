"""Firing-rate families: values, bounds, tails, and the steepness certificate."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from steeplab import ConfigError, FiringRateFamily, check_assumption_A
from steeplab.firing import firing_code, parse_firing

TANH = FiringRateFamily("tanh")
PWL = FiringRateFamily("pwl")
SHIFTED_PWL = parse_firing("shifted:pwl")
SHIFTED_TANH = parse_firing("shifted:tanh")
STEP = FiringRateFamily("heaviside")


class TestEval:
    def test_tanh_at_zero_is_half(self):
        for beta in (1, 7, 10**6):
            assert TANH.eval(beta, 0.0) == 0.5

    def test_pwl_on_ramp(self):
        assert PWL.eval(10, 0.05) == pytest.approx(0.75, abs=1e-15)

    def test_pwl_saturates(self):
        assert PWL.eval(10, 0.2) == 1.0
        assert PWL.eval(10, -0.2) == 0.0

    def test_heaviside_below_threshold(self):
        assert STEP.eval(1, -1.0) == 0.0
        assert STEP.eval(1, 1.0) == 1.0
        assert STEP.eval(1, 0.0) == 0.5

    def test_shifted_parity_at_zero(self):
        # shift +1/4 for even steepness, -1/6 for odd
        assert SHIFTED_PWL.eval(2, 0.0) == pytest.approx(0.75, abs=1e-15)
        assert SHIFTED_PWL.eval(3, 0.0) == pytest.approx(0.25, abs=1e-15)

    def test_array_evaluation(self):
        x = np.array([-1.0, 0.0, 1.0])
        out = PWL.eval(5, x)
        assert out.shape == (3,)
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])

    def test_infinite_beta_needs_explicit_limit(self):
        with pytest.raises(ConfigError):
            TANH.eval(math.inf, 0.3)
        assert TANH.eval(math.inf, 0.3, allow_limit=True) == 1.0
        assert TANH.eval(math.inf, 0.0, allow_limit=True) == 0.5

    def test_shifted_rejects_non_integer_beta(self):
        with pytest.raises(ConfigError):
            SHIFTED_PWL.eval(2.5, 0.0)

    def test_beta_below_one_rejected(self):
        with pytest.raises(ConfigError):
            PWL.eval(0.5, 0.0)


@given(
    beta=st.floats(min_value=1.0, max_value=1e9),
    x=st.floats(min_value=-1e6, max_value=1e6),
)
def test_rates_stay_in_unit_interval(beta, x):
    for family in (TANH, PWL, STEP):
        rate = family.eval(beta, x)
        assert 0.0 <= rate <= 1.0


@given(
    beta=st.integers(min_value=1, max_value=10**9),
    x=st.floats(min_value=-1e3, max_value=1e3),
)
def test_shifted_rates_stay_in_unit_interval(beta, x):
    for family in (SHIFTED_PWL, SHIFTED_TANH):
        assert 0.0 <= family.eval(beta, x) <= 1.0


@given(
    beta=st.integers(min_value=1, max_value=10**6),
    x1=st.floats(min_value=-10, max_value=10),
    x2=st.floats(min_value=-10, max_value=10),
)
def test_monotone_in_argument(beta, x1, x2):
    lo, hi = min(x1, x2), max(x1, x2)
    for family in (TANH, PWL, SHIFTED_PWL, SHIFTED_TANH):
        assert family.eval(beta, lo) <= family.eval(beta, hi) + 1e-15


def test_lipschitz_bound_half_beta():
    rng = np.random.default_rng(7)
    for family in (TANH, PWL):
        for beta in (1, 10, 1000):
            x = rng.uniform(-2, 2, size=500)
            y = x + rng.uniform(-0.1, 0.1, size=500)
            lhs = np.abs(family.eval(beta, x) - family.eval(beta, y))
            assert np.all(lhs <= 0.5 * beta * np.abs(x - y) + 1e-12)


def test_pointwise_convergence_off_zero():
    step = lambda x: 1.0 if x > 0 else 0.0
    for family in (TANH, PWL):
        for x in (-0.5, -0.05, 0.05, 0.5):
            devs = [abs(family.eval(b, x) - step(x)) for b in (10, 10**3, 10**6)]
            assert devs[0] >= devs[1] >= devs[2]
            assert devs[2] < 1e-9


def test_shifted_close_to_inner_outside_tails_but_not_at_zero():
    eps, delta = 0.01, 0.1
    q = check_assumption_A(SHIFTED_PWL, eps, delta).q
    for beta in (q + 1, q + 2, 10 * q):
        for x in (-5.0, -2 * delta, 2 * delta, 5.0):
            gap = abs(SHIFTED_PWL.eval(beta, x) - PWL.eval(beta, x))
            assert gap <= eps
    # near zero the parity shift moves the rate by a quarter
    assert abs(SHIFTED_PWL.eval(10**6, 0.0) - PWL.eval(10**6, 0.0)) >= 0.2


class TestAssumptionACertificate:
    def test_pwl_support_width_rule_for_any_eps(self):
        for eps in (0.01, 0.3, 0.9):
            for delta in (0.1, 0.25, 0.04, 1.0 / 3.0):
                report = check_assumption_A(PWL, eps, delta)
                assert report.passed
                assert report.q == math.ceil(1.0 / delta)

    def test_tanh_scalar_solve(self):
        report = check_assumption_A(TANH, 0.01, 0.1)
        assert report.q == 23
        for eps in (0.005, 0.02, 0.2):
            for delta in (0.05, 0.1, 0.7):
                expected = math.ceil(math.atanh(1.0 - 2.0 * eps) / delta)
                got = check_assumption_A(TANH, eps, delta).q
                assert abs(got - expected) <= 1

    def test_shifted_pwl_includes_shift_magnitude(self):
        report = check_assumption_A(SHIFTED_PWL, 0.25, 1.0)
        assert report.passed and report.q == 2

    @pytest.mark.parametrize("family", [SHIFTED_PWL, SHIFTED_TANH])
    def test_shifted_families_pass_with_verified_tails(self, family):
        eps, delta = 0.01, 0.1
        report = check_assumption_A(family, eps, delta)
        assert report.passed and report.q is not None
        for beta in (report.q, report.q + 1, 5 * report.q):
            assert family.eval(beta, -delta * 1.0000001) < eps
            assert 1.0 - family.eval(beta, delta * 1.0000001) < eps

    def test_certificate_respects_cap(self):
        report = check_assumption_A(PWL, 0.5, 1e-12, beta_cap=10**9)
        assert not report.passed and report.q is None

    def test_rejects_heaviside_and_bad_inputs(self):
        with pytest.raises(ConfigError):
            check_assumption_A(STEP, 0.1, 0.1)
        with pytest.raises(ConfigError):
            check_assumption_A(PWL, 1.5, 0.1)
        with pytest.raises(ConfigError):
            check_assumption_A(PWL, 0.1, -1.0)


class TestCodes:
    @pytest.mark.parametrize(
        "code", ["tanh", "pwl", "shifted:tanh", "shifted:pwl", "heaviside@0.5",
                 "heaviside@1", "heaviside@0"]
    )
    def test_round_trip(self, code):
        family = parse_firing(code)
        assert parse_firing(firing_code(family)).kind == family.kind

    def test_unknown_codes_rejected(self):
        for bad in ("sigmoid", "shifted:heaviside", "heaviside@2", "heaviside@x"):
            with pytest.raises(ConfigError):
                parse_firing(bad)
