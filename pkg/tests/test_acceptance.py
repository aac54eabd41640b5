"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one ``criterion N PASS/FAIL`` line (run with ``pytest -s``
to see them).  Trajectories produced along the way are pooled so the
uniform-bound audit covers everything the earlier criteria computed.
"""

import functools
import math
import time

import numpy as np
import pytest

from steeplab import (
    ClosedForm,
    builtin,
    check_assumption_A,
    integrate,
    p_measure,
    parse_firing,
    r_measure,
    solve_heaviside_right_smooth,
    sup_distance,
    sweep,
    threshold_diagnostics,
    uniform_bound,
    volterra_residual,
)

V1 = ClosedForm("v1", omega=1.2, u_theta=0.6).trajectory(5.0)
V2 = ClosedForm("v2", u_theta=0.6).trajectory(5.0)
V3 = ClosedForm("v3", u_theta=0.6).trajectory(5.0)

# trajectories produced by criteria 1-5, audited by criterion 6:
# entries (label, scenario, trajectory)
_PRODUCED = []


def _verdict(number, description):
    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {number} FAIL  {description}")
                raise
            print(f"criterion {number} PASS  {description}")

        return wrapper

    return decorator


@pytest.fixture(scope="module")
def decay_run():
    scenario = builtin("decay")
    start = time.perf_counter()
    traj = integrate(scenario, 100)
    elapsed = time.perf_counter() - start
    _PRODUCED.append(("decay", scenario, traj))
    return traj, elapsed


@pytest.fixture(scope="module")
def parity_runs():
    scenario = builtin("alt-subseq")
    runs = {}
    for beta in (10_000_000, 10_000_001):
        start = time.perf_counter()
        traj = integrate(scenario, beta)
        runs[beta] = (traj, time.perf_counter() - start)
        _PRODUCED.append((f"alt-subseq@{beta}", scenario, traj))
    return runs


@pytest.fixture(scope="module")
def threshold_advanced_sweep():
    scenario = builtin("threshold-advanced")
    report = sweep(scenario, [100, 1000, 10_000])
    for beta, traj in report.trajectories.items():
        _PRODUCED.append((f"threshold-advanced@{beta:g}", scenario, traj))
    return scenario, report


@_verdict(1, "decoupled decay matches exp(-t) within 1e-8 in under 1 s")
def test_criterion_1_integrator_oracle(decay_run):
    traj, elapsed = decay_run
    grid = np.linspace(0.0, 5.0, 2001)
    err = float(np.max(np.abs(traj.value(grid)[:, 0] - np.exp(-grid))))
    assert err <= 1e-8
    assert elapsed < 1.0


@_verdict(2, "steepness 1e7 / 1e7+1 land within 1e-2 of v1 / v2 in under 30 s")
def test_criterion_2_parity_reproduction(parity_runs):
    even, t_even = parity_runs[10_000_000]
    odd, t_odd = parity_runs[10_000_001]
    assert sup_distance(even, V1) <= 1e-2
    assert sup_distance(odd, V2) <= 1e-2
    assert t_even < 30.0 and t_odd < 30.0


@_verdict(3, "v1, v2, v3 pass the limit-problem integral residual at 1e-6")
def test_criterion_3_multi_solution_verification():
    scenario = builtin("multi-solution")
    for candidate in (V1, V2, V3):
        res = volterra_residual(candidate, scenario, math.inf, quad_n=10_000)
        assert res.sup_residual <= 1e-6


@_verdict(4, "limit solver returns v1/v2/v3 under zero value 1/0/0.5 at 1e-8")
def test_criterion_4_right_smooth_conventions():
    scenario = builtin("multi-solution")
    for zero_value, closed_form in ((1.0, V1), (0.0, V2), (0.5, V3)):
        solution = solve_heaviside_right_smooth(scenario.with_heaviside(zero_value))
        assert sup_distance(solution.trajectory, closed_form) <= 1e-8
        _PRODUCED.append((f"limit@{zero_value:g}", scenario, solution.trajectory))


@_verdict(5, "threshold-advanced limit: constant u_theta, classified, residual 0.6t")
def test_criterion_5_threshold_advanced_non_solution(threshold_advanced_sweep):
    scenario, report = threshold_advanced_sweep
    assert not report.failures
    assert len(report.clusters) == 1
    cluster = report.clusters[0]
    assert cluster.match == "const-u-theta"
    largest = report.trajectories[max(report.trajectories)]
    assert sup_distance(largest, V3) <= 1.0 / 10_000 + 1e-8

    diag = threshold_diagnostics(V3, 0.6)
    assert diag.classification == "threshold-advanced"

    res = volterra_residual(V3, scenario, math.inf, quad_n=10_000)
    np.testing.assert_allclose(res.curve[:, 1], 0.6 * res.curve[:, 0], atol=1e-6)
    assert res.sup_residual == pytest.approx(3.0, abs=1e-6)


@_verdict(6, "every produced trajectory obeys the a priori sup-norm bound")
def test_criterion_6_uniform_bound_audit(decay_run, parity_runs,
                                         threshold_advanced_sweep):
    assert len(_PRODUCED) >= 9
    for label, scenario, traj in _PRODUCED:
        bound = uniform_bound(scenario, scenario.source.bound())
        grid = traj.grid(4096)
        peak = float(np.max(np.abs(traj.value(grid))))
        assert peak <= bound + 1e-6, label


@_verdict(7, "steepness certificates: ramp exact, tanh within one, shifts pass")
def test_criterion_7_assumption_a_checker():
    pwl = parse_firing("pwl")
    for eps in (0.01, 0.3, 0.9):
        for delta in (0.1, 0.25, 0.04):
            assert check_assumption_A(pwl, eps, delta).q == math.ceil(1.0 / delta)
    tanh = parse_firing("tanh")
    for eps in (0.005, 0.01, 0.2):
        for delta in (0.05, 0.1, 0.5):
            expected = math.ceil(math.atanh(1.0 - 2.0 * eps) / delta)
            assert abs(check_assumption_A(tanh, eps, delta).q - expected) <= 1
    for code in ("shifted:pwl", "shifted:tanh"):
        family = parse_firing(code)
        report = check_assumption_A(family, 0.01, 0.1)
        assert report.passed
        for beta in (report.q, 2 * report.q + 1):
            assert family.eval(beta, -0.1000001) < 0.01
            assert 1.0 - family.eval(beta, 0.1000001) < 0.01


@_verdict(8, "measure diagnostics: partition, r-curve inversion, full plateau")
def test_criterion_8_measure_diagnostics():
    rng = np.random.default_rng(42)
    for _ in range(20):
        delta = float(10 ** rng.uniform(-4, -0.5))
        t = float(rng.uniform(0.5, 5.0))
        cell = t / 10_000
        total = p_measure(V1, 0.6, delta, t) + r_measure(V1, 0.6, delta, t)
        assert abs(total - t) <= 2 * cell
    diag = threshold_diagnostics(V1, 0.6, deltas=(0.06, 0.006, 0.0006))
    for delta, measured in diag.r_curve:
        expected = -math.log(1.0 - delta / 0.6)
        assert abs(measured - expected) <= 2 * diag.resolution
    assert threshold_diagnostics(V3, 0.6).z_measure == 5.0


@_verdict(9, "sweep clustering: parity split to v1/v2, uncoupled converges")
def test_criterion_9_sweep_clustering():
    report = sweep(builtin("alt-subseq"), [10**6, 10**6 + 1, 10**7, 10**7 + 1])
    assert len(report.clusters) == 2
    assert {c.match for c in report.clusters} == {"v1", "v2"}
    assert report.entire_sequence_converges is False

    decay_report = sweep(builtin("decay"), [10, 100, 1000])
    assert len(decay_report.clusters) == 1
    assert decay_report.entire_sequence_converges is True
