"""Adaptive embedded Runge-Kutta 5(4) integration with dense output.

The stepper is the classic Dormand-Prince pair with the free quartic
interpolant, FSAL reuse, and a proportional step controller.  Two
additions matter for steep firing-rate models:

* steps are split exactly at the drive's declared jump times, evaluating
  the left branch at a segment's right endpoint so no stage ever straddles
  a discontinuity;
* while any component sits inside the firing family's transition layer
  (|u_j - u_theta| <= twice the layer half-width) the step is capped so
  the layer cannot be stepped over, no matter how steep the sigmoid.

``detect_crossings`` locates threshold crossings of any trajectory by
sign change on a dense grid refined by bisection, reports tangential
touches, and refuses to enumerate crossings of a threshold plateau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    IntegrationError,
    StepUnderflowError,
    ThresholdPlateauError,
)
from .model import Scenario, rhs, uniform_bound
from .trajectory import DenseOutputTrajectory, Trajectory

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Weights of the quartic dense-output correction stage.
_D = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_UNDERFLOW_FRACTION = 1e-14


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def _initial_step(f, t0, y0, f0, rel_tol, abs_tol, span):
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def solve_rk45(
    f,
    t0: float,
    t1: float,
    y0,
    rel_tol: float,
    abs_tol: float,
    *,
    cap_fn=None,
    h_floor: float | None = None,
    max_steps: int = 1_000_000,
    f0=None,
):
    """Integrate ``y' = f(t, y)`` over [t0, t1] with dense output.

    Returns ``(times, states, coeffs, f_end)`` where ``coeffs`` holds the
    per-step quartic interpolant rows (A, B, C, D).  ``cap_fn(t, y, f)``
    may impose an additional step-size cap (``inf`` when inactive).
    Raises :class:`StepUnderflowError` when the required step drops below
    ``h_floor`` and :class:`IntegrationError` on non-finite values.
    """
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ConfigError("initial state must be finite")
    span = t1 - t0
    if span <= 0:
        raise ConfigError("integration span must be positive")
    if h_floor is None:
        h_floor = _UNDERFLOW_FRACTION * span

    k1 = np.asarray(f(t0, y), dtype=float) if f0 is None else np.asarray(f0, dtype=float)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError(f"non-finite right-hand side at t={t0:.17g}")
    h_abs = _initial_step(f, t0, y, k1, rel_tol, abs_tol, span)

    times = [t0]
    states = [y.copy()]
    coeffs = []
    t = t0
    n_steps = 0
    K = np.empty((7, y.size))

    while t < t1:
        if n_steps >= max_steps:
            raise IntegrationError(f"step budget exhausted at t={t:.17g}")
        cap = t1 - t
        if cap_fn is not None:
            cap = min(cap, cap_fn(t, y, k1))
        h = min(h_abs, cap)
        rejected = False
        while True:
            n_steps += 1
            if h < h_floor:
                raise StepUnderflowError(t)
            K[0] = k1
            for i in range(1, 6):
                K[i] = f(t + _C[i] * h, y + h * (K[:i].T @ _A[i]))
            y_new = y + h * (K[:6].T @ _B)
            K[6] = f(t + h, y_new)
            if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y_new))):
                raise IntegrationError(
                    f"non-finite right-hand side near t={t + h:.17g}"
                )
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(h * (K.T @ _E) / scale)
            if err <= 1.0:
                break
            rejected = True
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)

        delta = y_new - y
        b = h * K[0] - delta
        c = delta - h * K[6] - b
        d = h * (K.T @ _D)
        coeffs.append(np.stack([delta, b, c, d]))

        t = t + h
        if t1 - t <= _UNDERFLOW_FRACTION * span:
            t = t1
        times.append(t)
        states.append(y_new)
        y = y_new
        k1 = K[6].copy()

        factor = _MAX_FACTOR if err == 0.0 else min(
            _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        )
        if rejected:
            factor = min(factor, 1.0)
        h_abs = h * factor

    return np.array(times), np.array(states), np.array(coeffs), k1


def _layer_cap(scenario: Scenario, beta: float):
    halfwidth = scenario.firing.layer_halfwidth(beta)
    if halfwidth <= 0.0:
        return None
    p = scenario.params
    band = 2.0 * halfwidth
    # fastest local rate inside the layer; keeps the explicit pair inside
    # its stability region while a component hugs the transition
    rate = (1.0 + p.max_row_sum() * scenario.firing.lipschitz_bound(beta)) / float(
        np.min(p.tau)
    )
    stability_cap = 2.5 / rate

    def cap(t, y, fy):
        if np.min(np.abs(y - p.u_theta)) > band:
            return math.inf
        speed = float(np.max(np.abs(fy)))
        if speed == 0.0:
            return math.inf  # exact stationary point; nothing to resolve
        return min(halfwidth / speed, stability_cap)

    return cap


def _snap_to_saturation(scenario: Scenario, beta: float, y: np.ndarray) -> np.ndarray:
    """Align components sitting a few ulps off a saturation kink onto it.

    Constructed drives can make the exact solution ride the argument where
    the ramp family saturates; there the dynamics are one-sidedly unstable
    and pure roundoff in the incoming state would otherwise seed an
    exponential departure.  The correction is at most a few ulps, many
    orders below the integration tolerances.
    """
    offsets = scenario.firing.saturation_offsets(beta)
    if not offsets:
        return y
    u_theta = scenario.params.u_theta
    y = y.copy()
    for x_sat in offsets:
        anchor = u_theta + x_sat
        outward = math.inf if x_sat > 0 else -math.inf
        for _ in range(4):
            rate = scenario.firing.eval(beta, anchor - u_theta)
            if rate == (1.0 if x_sat > 0 else 0.0):
                break
            anchor = np.nextafter(anchor, outward)
        near = np.abs(y - anchor) <= 8.0 * np.spacing(anchor)
        y[near] = anchor
    return y


def integrate(
    scenario: Scenario,
    beta,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
) -> DenseOutputTrajectory:
    """Solve the scenario at finite steepness ``beta`` on [0, T].

    Local error per step is controlled to the tolerances; the step is
    additionally capped inside the firing transition layer, and steps are
    aligned with the drive's jump times.  The returned trajectory carries
    the accepted nodes and the quartic interpolant.
    """
    beta = float(beta)
    if not (np.isfinite(beta) and beta >= 1.0):
        raise ConfigError("integrate needs finite beta >= 1")
    for label, tol in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not (0.0 < tol <= 1e-2):
            raise ConfigError(f"{label} must lie in (0, 1e-2]")

    p = scenario.params
    t_end = p.t_end
    cap_fn = _layer_cap(scenario, beta)
    h_floor = _UNDERFLOW_FRACTION * t_end

    bps = np.asarray(scenario.source.breakpoints(beta), dtype=float)
    bps = np.sort(bps[(bps > 0.0) & (bps < t_end)])
    edges = np.concatenate([[0.0], bps, [t_end]])

    all_t = [np.array([0.0])]
    all_y = [p.u_init[None, :].copy()]
    all_q = []
    y = p.u_init.copy()
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo > 0.0:
            y = _snap_to_saturation(scenario, beta, y)
        jump_tol = 1e-13 * max(1.0, abs(hi))

        def f(t, u, _hi=hi, _tol=jump_tol):
            side = "-" if t >= _hi - _tol else "+"
            return rhs(scenario, beta, min(t, _hi), u, side)

        ts, ys, qs, _ = solve_rk45(
            f, lo, hi, y, rel_tol, abs_tol, cap_fn=cap_fn, h_floor=h_floor
        )
        all_t.append(ts[1:])
        all_y.append(ys[1:])
        all_q.append(qs)
        y = ys[-1]

    traj = DenseOutputTrajectory(
        np.concatenate(all_t),
        np.concatenate(all_y),
        np.concatenate(all_q),
        name=f"{scenario.name or 'scenario'}@beta={beta:g}",
    )

    bound = uniform_bound(scenario, scenario.source.bound())
    slack = max(1e-6, 100.0 * (rel_tol + abs_tol))
    peak = float(np.max(np.abs(traj.node_states)))
    if peak > bound + slack:
        raise IntegrationError(
            f"uniform bound violated: max |u| = {peak:.6g} > {bound:.6g} + slack"
        )
    return traj


# ----------------------------------------------------------------------
# threshold-crossing events
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CrossingEvent:
    t: float
    component: int
    direction: str  # upward | downward | tangential


def _bisect(fn, lo, hi, tol):
    flo = fn(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def _detection_grid(traj: Trajectory) -> np.ndarray:
    if isinstance(traj, DenseOutputTrajectory):
        nodes = traj.node_times
        offs = np.array([0.25, 0.5, 0.75])
        interior = (nodes[:-1, None] + np.diff(nodes)[:, None] * offs).ravel()
        return np.union1d(nodes, interior)
    return traj.grid(4096)


def detect_crossings(traj: Trajectory, u_theta: float, root_tol: float):
    """All threshold attainments of ``traj``, sorted by time.

    Sign changes on the detection grid are refined by bisection to
    ``root_tol``; local extrema that come within ``root_tol`` of the
    threshold without a sign flip are reported as tangential.  Whole
    intervals at the threshold raise :class:`ThresholdPlateauError`.
    """
    if not root_tol > 0.0:
        raise ConfigError("root_tol must be positive")
    grid = _detection_grid(traj)
    gap = np.abs(traj.value(grid) - u_theta)
    snap = 1e-12 * max(1.0, abs(u_theta))

    plateaus = []
    for j in range(traj.n):
        flat = gap[:, j] <= snap
        both = flat[:-1] & flat[1:]
        if np.any(both):
            idx = np.flatnonzero(both)
            start = idx[0]
            for a, b in zip(idx, idx[1:]):
                if b != a + 1:
                    plateaus.append((j, grid[start], grid[a + 1]))
                    start = b
            plateaus.append((j, grid[start], grid[idx[-1] + 1]))
    if plateaus:
        raise ThresholdPlateauError(plateaus)

    events = []
    for j in range(traj.n):
        g = traj.value(grid)[:, j] - u_theta

        def gj(s, _j=j):
            return float(traj.value(s)[_j] - u_theta)

        zero_nodes = np.flatnonzero(np.abs(g) <= snap)
        for i in zero_nodes:
            after = g[i + 1] if i + 1 < g.size else -g[i - 1]
            before = g[i - 1] if i > 0 else -after
            if before < -snap and after > snap:
                direction = "upward"
            elif before > snap and after < -snap:
                direction = "downward"
            elif before > snap or before < -snap:
                # interior touch returning to the same side
                direction = "tangential"
            elif after > snap:
                direction = "upward"
            elif after < -snap:
                direction = "downward"
            else:
                direction = "tangential"
            events.append(CrossingEvent(float(grid[i]), j, direction))

        sign = np.sign(g)
        flips = np.flatnonzero(sign[:-1] * sign[1:] < 0.0)
        for i in flips:
            t_star = _bisect(gj, grid[i], grid[i + 1], root_tol)
            direction = "upward" if g[i] < 0 else "downward"
            events.append(CrossingEvent(float(t_star), j, direction))

        dg = traj.derivative(grid)[:, j]
        dsign = np.sign(dg)
        extrema = np.flatnonzero(dsign[:-1] * dsign[1:] < 0.0)
        for i in extrema:
            if sign[i] * sign[i + 1] < 0.0:
                continue  # already a crossing

            def dgj(s, _j=j):
                return float(traj.derivative(s)[_j])

            t_star = _bisect(dgj, grid[i], grid[i + 1], root_tol)
            if abs(gj(t_star)) < root_tol:
                events.append(CrossingEvent(float(t_star), j, "tangential"))

    events.sort(key=lambda e: (e.t, e.component))
    merged = []
    window = max(root_tol, 1e-13 * max(1.0, traj.t_end))
    for ev in events:
        if merged and ev.component == merged[-1].component and ev.t - merged[-1].t <= window:
            continue
        merged.append(ev)
    return merged
