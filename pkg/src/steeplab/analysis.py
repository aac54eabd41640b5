"""Threshold-set diagnostics, Volterra residual verification, sweeps.

The diagnostics estimate how much time a trajectory spends at (or within
delta of) the firing threshold: Lebesgue measures are approximated by
unions of grid intervals whose boundaries are refined by bisection, and
the resolution of every estimate is reported alongside it.  The residual
check evaluates the integral (Volterra) form of the model, which stays
meaningful at crossings where the differential form does not.  The sweep
harness integrates a list of steepness values, groups the results into
clusters by sup-distance, and matches each cluster against registered
closed-form limits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SteeplabError, ThresholdPlateauError
from .integrator import detect_crossings, integrate
from .model import Scenario, uniform_bound
from .quadrature import build_grid, cumulative_midpoint, midpoints
from .scenarios import limit_candidates
from .trajectory import Trajectory


# ----------------------------------------------------------------------
# pointwise distance to threshold and measure estimates
# ----------------------------------------------------------------------

def m_min(traj: Trajectory, s: float, u_theta: float) -> float:
    """Minimum over components of |u_j(s) - u_theta|."""
    return float(np.min(np.abs(traj.value(s) - u_theta)))


def _measure(traj, u_theta, thr, t_hi, grid_n, below=True):
    """Measure of {s in [t_start, t_hi] : m(s) <= thr} (or its complement).

    Interval boundaries between differently-flagged grid nodes are refined
    by bisection, so the estimate is far finer than one grid cell unless
    the set's structure itself is unresolved.
    """
    nodes = build_grid(traj.t_start, t_hi, grid_n, traj.breakpoints)
    m = np.min(np.abs(traj.value(nodes) - u_theta), axis=1)
    flag = (m <= thr) if below else (m > thr)
    if not np.any(flag):
        return 0.0
    if np.all(flag):
        return float(t_hi - traj.t_start)

    def inside(s):
        return (m_min(traj, s, u_theta) <= thr) == below

    def refine(lo, hi, lo_inside):
        # lo and hi have different membership; locate the boundary
        for _ in range(60):
            if hi - lo <= 1e-15 * max(1.0, t_hi):
                break
            mid = 0.5 * (lo + hi)
            if inside(mid) == lo_inside:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    idx = np.flatnonzero(flag)
    runs = []
    run_start = prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            runs.append((run_start, prev))
            run_start = i
        prev = i
    runs.append((run_start, prev))

    total = 0.0
    for a, b in runs:
        left = nodes[0] if a == 0 else refine(nodes[a - 1], nodes[a], lo_inside=False)
        right = (
            nodes[-1] if b == nodes.size - 1
            else refine(nodes[b], nodes[b + 1], lo_inside=True)
        )
        total += right - left
    return float(total)


def r_measure(traj, u_theta, delta, t, grid_n=10_000):
    """Measure of the time in [0, t] spent within delta of the threshold."""
    if not delta > 0:
        raise ConfigError("delta must be positive")
    return _measure(traj, u_theta, delta, t, grid_n, below=True)


def p_measure(traj, u_theta, delta, t, grid_n=10_000):
    """Measure of the time in [0, t] spent farther than delta from threshold."""
    if not delta > 0:
        raise ConfigError("delta must be positive")
    return _measure(traj, u_theta, delta, t, grid_n, below=False)


# ----------------------------------------------------------------------
# threshold diagnostics
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifierConfig:
    """Explicit constants behind the classification verdicts."""

    atol: float = 1e-9          # |u - u_theta| below this counts as "at threshold"
    simple_cells: float = 1.0   # Z within this many cells still counts as null
    advanced_cells: float = 10.0
    finite_cap: int = 1000      # more crossings than this counts as accumulation


@dataclass(frozen=True)
class ThresholdDiagnostics:
    crossing_count: object      # int (crossings in (0, T]) or "plateau"
    z_measure: float
    r_curve: tuple
    classification: str
    resolution: float
    warnings: tuple = ()
    events: tuple = ()


def _finest_threshold_feature(traj, u_theta, band):
    """Smallest knot spacing where the state moves near the threshold.

    Sampled trajectories (integrator output, re-ingested CSV) expose their
    knots; a knot interval counts as a feature only if it touches the band
    around the threshold and the state actually changes across it, so a
    finely sampled frozen trajectory does not masquerade as unresolvable.
    """
    if hasattr(traj, "node_times"):
        times, values = traj.node_times, traj.node_states
    elif hasattr(traj, "times"):
        times, values = traj.times, traj.values
    else:
        return traj.min_feature
    near = np.min(np.abs(values - u_theta), axis=1) <= band
    near_iv = near[:-1] | near[1:]
    scale = max(1.0, float(np.max(np.abs(values))))
    moving = np.max(np.abs(np.diff(values, axis=0)), axis=1) > 1e-12 * scale
    dts = np.diff(times)[near_iv & moving]
    return float(np.min(dts)) if dts.size else traj.t_end - traj.t_start


def threshold_diagnostics(
    traj: Trajectory,
    u_theta: float,
    grid_n: int = 10_000,
    deltas=(0.1, 0.01, 0.001),
    config: ClassifierConfig = ClassifierConfig(),
) -> ThresholdDiagnostics:
    """Estimate the threshold set and classify the trajectory.

    ``z_measure`` estimates the time spent at the threshold (within the
    classifier's ``atol``); ``r_curve`` lists (delta, measure-within-delta)
    pairs over the full horizon.  Classification is empirical: a plateau or
    a threshold set above ``advanced_cells`` grid cells is
    threshold-advanced, finitely many crossings with a null threshold set
    is extra-threshold-simple, accumulating crossings with a null set is
    threshold-simple, and anything the grid cannot resolve is reported as
    undetermined with a warning rather than silently classified.
    """
    if grid_n < 1000:
        raise ConfigError("grid_n must be at least 1000")
    deltas = tuple(float(d) for d in deltas)
    if not deltas or any(d <= 0 for d in deltas) or any(
        b >= a for a, b in zip(deltas, deltas[1:])
    ):
        raise ConfigError("deltas must be positive and strictly decreasing")

    span = traj.t_end - traj.t_start
    cell = span / grid_n
    warnings = []
    feature = _finest_threshold_feature(traj, u_theta, band=max(deltas))
    if feature < cell:
        warnings.append(
            f"grid cell {cell:.3g} is coarser than the trajectory's smallest "
            f"near-threshold feature {feature:.3g}; classification withheld"
        )

    plateau = False
    events = []
    try:
        events = detect_crossings(traj, u_theta, root_tol=1e-12 * max(1.0, span))
    except ThresholdPlateauError:
        plateau = True

    z = _measure(traj, u_theta, config.atol, traj.t_end, grid_n, below=True)
    r_curve = tuple((d, _measure(traj, u_theta, d, traj.t_end, grid_n, below=True))
                    for d in deltas)

    interior = sum(1 for e in events if e.t > traj.t_start)
    if warnings:
        classification = "undetermined"
    elif plateau or z > config.advanced_cells * cell:
        classification = "threshold-advanced"
    elif len(events) <= config.finite_cap and z <= config.simple_cells * cell:
        classification = "extra-threshold-simple"
    elif z <= config.simple_cells * cell:
        classification = "threshold-simple"
    else:
        classification = "undetermined"
        warnings.append(
            f"threshold measure {z:.3g} sits between the simple and advanced "
            "cutoffs at this resolution"
        )

    return ThresholdDiagnostics(
        crossing_count="plateau" if plateau else interior,
        z_measure=z,
        r_curve=r_curve,
        classification=classification,
        resolution=cell,
        warnings=tuple(warnings),
        events=tuple(events),
    )


# ----------------------------------------------------------------------
# Volterra residual
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class VolterraResult:
    sup_residual: float
    curve: np.ndarray  # columns (t, residual)


def volterra_residual(
    traj: Trajectory,
    scenario: Scenario,
    beta,
    quad_n: int = 10_000,
    crossings=None,
) -> VolterraResult:
    """Sup-norm residual of the integral form of the model along ``traj``.

    Evaluates, on a grid split at drive jumps, trajectory knots, and
    threshold crossings,

        R(t) = || tau*(u(t) - u(0)) + I[u] - I[omega S_beta(u - u_theta)]
                - I[q_beta] ||_inf

    with one midpoint sample per subinterval, so piecewise-constant and
    piecewise-linear integrands are integrated exactly and the value the
    step convention assigns on the measure-zero threshold set never
    contributes.  ``beta = math.inf`` verifies a candidate against the
    limit problem, using the firing family's pointwise limit.
    """
    if quad_n < 1000:
        raise ConfigError("quad_n must be at least 1000")
    p = scenario.params
    if traj.n != p.n:
        raise ConfigError("trajectory dimension does not match the scenario")
    if traj.t_end < p.t_end - 1e-12 * max(1.0, p.t_end):
        raise ConfigError(
            f"trajectory domain ends at {traj.t_end:g}, scenario horizon is {p.t_end:g}"
        )

    if crossings is None:
        try:
            crossings = detect_crossings(
                traj, p.u_theta, root_tol=1e-12 * max(1.0, p.t_end)
            )
        except ThresholdPlateauError:
            crossings = []
    cross_t = np.array([e.t for e in crossings], dtype=float)

    refine = []
    halfwidth = scenario.firing.layer_halfwidth(beta) if not math.isinf(
        float(beta)) else 0.0
    if halfwidth > 0.0:
        # the coupling integrand varies over the transition layer around a
        # crossing; sample that window finely enough for the midpoint rule
        for e in crossings:
            speed = float(np.max(np.abs(traj.derivative(e.t))))
            if speed <= 0.0:
                continue
            dwell = halfwidth / speed
            lo = max(0.0, e.t - 2.0 * dwell)
            hi = min(p.t_end, e.t + 2.0 * dwell)
            if hi > lo:
                refine.append(np.linspace(lo, hi, 257))
    extra = np.concatenate(
        [traj.breakpoints, np.asarray(scenario.source.breakpoints(beta), dtype=float),
         cross_t] + refine
    )
    nodes = build_grid(0.0, p.t_end, quad_n, extra)
    mids = midpoints(nodes)

    u_mid = traj.value(mids)
    firing_arg = u_mid - p.u_theta
    if math.isinf(float(beta)):
        # the at-zero convention must see the threshold set despite roundoff
        firing_arg[np.abs(firing_arg) <= 1e-12 * max(1.0, abs(p.u_theta))] = 0.0
    rates = scenario.firing.eval(beta, firing_arg, allow_limit=True)
    coupling = rates @ p.omega.T
    drive = scenario.source.eval(beta, mids)

    cum_u = cumulative_midpoint(nodes, u_mid)
    cum_c = cumulative_midpoint(nodes, coupling)
    cum_q = cumulative_midpoint(nodes, drive)

    lhs = p.tau * (traj.value(nodes) - p.u_init)
    resid = np.max(np.abs(lhs + cum_u - cum_c - cum_q), axis=1)
    return VolterraResult(
        sup_residual=float(np.max(resid)),
        curve=np.column_stack([nodes, resid]),
    )


# ----------------------------------------------------------------------
# sup distance and sweeps
# ----------------------------------------------------------------------

def sup_distance(a: Trajectory, b: Trajectory, grid_n: int = 2048) -> float:
    """Max over a shared grid of the sup-norm pointwise distance."""
    if a.n != b.n:
        raise ConfigError("trajectories have different dimensions")
    if abs(a.t_end - b.t_end) > 1e-9 * max(1.0, a.t_end) or abs(
        a.t_start - b.t_start
    ) > 1e-9:
        raise ConfigError("trajectories live on different domains")
    grid = build_grid(a.t_start, a.t_end, grid_n,
                      np.concatenate([a.breakpoints, b.breakpoints]))
    return float(np.max(np.abs(a.value(grid) - b.value(grid))))


@dataclass(frozen=True)
class SweepCluster:
    betas: tuple
    representative_beta: float
    diameter: float
    match: str | None
    match_distance: float | None


@dataclass(frozen=True)
class SweepReport:
    betas: tuple
    distance_matrix: np.ndarray
    clusters: tuple
    entire_sequence_converges: bool
    margin: float
    warnings: tuple = ()
    failures: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)


def _clusters_by_distance(betas, dist, tol):
    parent = list(range(len(betas)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(betas)):
        for j in range(i + 1, len(betas)):
            if dist[i, j] < tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(betas)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: betas[g[0]])


def sweep(
    scenario: Scenario,
    betas,
    *,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    cluster_tol: float = 1e-2,
    grid_n: int = 2048,
    extra_candidates=(),
    max_workers: int = 1,
) -> SweepReport:
    """Integrate every steepness value and group the results into clusters.

    Clusters are the transitive closure of "sup-distance below
    ``cluster_tol``"; each cluster's largest-beta member is matched against
    the registered closed-form limits (plus ``extra_candidates``, given as
    (name, trajectory) pairs).  Integration failures are recorded per beta
    and the sweep continues.  The whole-sequence verdict is true when a
    single cluster remains whose tail distances do not grow, with
    ``margin`` measuring how comfortably the clustering held.
    """
    betas = sorted({float(b) for b in betas})
    if not betas:
        raise ConfigError("beta list must be nonempty")

    failures: dict[float, str] = {}
    trajectories: dict[float, Trajectory] = {}

    def run(b):
        try:
            return b, integrate(scenario, b, rel_tol, abs_tol), None
        except SteeplabError as exc:
            return b, None, f"{type(exc).__name__}: {exc}"

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(run, betas))
    else:
        outcomes = [run(b) for b in betas]
    for b, traj, err in outcomes:
        if err is None:
            trajectories[b] = traj
        else:
            failures[b] = err

    ok = [b for b in betas if b in trajectories]
    k = len(ok)
    dist = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            dist[i, j] = dist[j, i] = sup_distance(
                trajectories[ok[i]], trajectories[ok[j]], grid_n
            )

    warnings = []
    bound = uniform_bound(scenario, scenario.source.bound())
    for b in ok:
        grid = trajectories[b].grid(grid_n)
        peak = float(np.max(np.abs(trajectories[b].value(grid))))
        if peak > bound + 1e-6:
            warnings.append(
                f"beta={b:g} exceeds the uniform bound: {peak:.6g} > {bound:.6g}"
            )

    candidates = list(limit_candidates(scenario)) + list(extra_candidates)
    groups = _clusters_by_distance(ok, dist, cluster_tol)
    clusters = []
    for group in groups:
        members = tuple(ok[i] for i in group)
        rep = trajectories[members[-1]]
        diameter = float(np.max(dist[np.ix_(group, group)])) if len(group) > 1 else 0.0
        match, match_dist = None, None
        for name, cand in candidates:
            d = sup_distance(rep, cand, grid_n)
            if d < cluster_tol and (match_dist is None or d < match_dist):
                match, match_dist = name, d
        if match is None and candidates:
            warnings.append(
                f"cluster at beta={members[-1]:g}: unidentified limit"
            )
        clusters.append(
            SweepCluster(
                betas=members,
                representative_beta=members[-1],
                diameter=diameter,
                match=match,
                match_distance=match_dist,
            )
        )

    converges = len(clusters) == 1 and not failures
    if converges and k >= 3:
        d_first, d_last = dist[0, 1], dist[-2, -1]
        converges = d_last <= d_first * 1.001 + 1e-9
    if not clusters:
        margin = math.nan
    elif len(clusters) == 1:
        margin = cluster_tol - clusters[0].diameter
    else:
        inter = min(
            dist[i, j]
            for ga in groups
            for gb in groups
            if ga is not gb
            for i in ga
            for j in gb
        )
        margin = cluster_tol - inter

    return SweepReport(
        betas=tuple(betas),
        distance_matrix=dist,
        clusters=tuple(clusters),
        entire_sequence_converges=bool(converges),
        margin=float(margin),
        warnings=tuple(warnings),
        failures=failures,
        trajectories=trajectories,
    )
