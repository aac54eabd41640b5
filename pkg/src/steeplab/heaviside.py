"""Forward solver for the infinite-steepness (Heaviside) limit problem.

Between threshold attainments the limit system is linear with a constant
firing vector, so each segment is advanced with the exact affine
exponential solution and the next crossing time is computed in closed
form; no discretization error enters the solution of a problem whose
answer is known to hinge on conventions.

At a segment start every at-threshold component needs a firing value that
the Heaviside step does not determine.  Two modes are exposed:

* ``convention`` takes the firing family's configured value at zero;
* ``solve`` determines the full firing vector from the linear system
  ``tau * v'(a) = -v(a) + omega @ z + q(a)`` with the incoming segment's
  left-limit derivative (convention values are used at t = 0, where no
  incoming segment exists).

Either way the produced trajectory must actually satisfy the limit
ODE on the following open interval.  A component leaving the threshold
upward needs firing value 1, downward needs 0, and a component that
stays put needs exactly the convention value; when an assigned value
contradicts the departure direction (and the component drives anyone
through a nonzero connectivity column) there is no right-smooth
continuation and the solver raises instead of fabricating one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    CrossingBudgetError,
    NumericalError,
    RightSmoothError,
    SingularConnectivityError,
)
from .integrator import CrossingEvent
from .model import Scenario, SourceFamily
from .trajectory import PiecewiseExpTrajectory


@dataclass(frozen=True)
class HeavisideSolution:
    trajectory: PiecewiseExpTrajectory
    crossings: tuple
    z_values: np.ndarray      # firing vector in force after each boundary
    boundary_times: np.ndarray


def _firing_vector(v, u_theta, at_threshold, conv, mode, omega, tau, q_now, d_left):
    s = np.where(v > u_theta, 1.0, 0.0)
    if not np.any(at_threshold):
        return s
    if mode == "convention" or d_left is None:
        s[at_threshold] = conv
        return s
    try:
        z = np.linalg.solve(omega, tau * d_left + v - q_now)
    except np.linalg.LinAlgError as exc:
        raise SingularConnectivityError("connectivity matrix singular") from exc
    s[at_threshold] = z[at_threshold]
    return s


def solve_heaviside_right_smooth(
    scenario: Scenario,
    q_limit: SourceFamily | None = None,
    *,
    mode: str = "convention",
    max_crossings: int = 10_000,
):
    """Right-smooth forward solution of the Heaviside-limit problem.

    The scenario must carry a ``heaviside`` firing family; ``q_limit``
    defaults to the scenario's source (evaluated at infinite steepness)
    and must be piecewise constant in time.  Raises
    :class:`RightSmoothError` when no consistent continuation exists,
    :class:`CrossingBudgetError` after ``max_crossings`` threshold
    crossings, and :class:`SingularConnectivityError` in ``solve`` mode
    with a singular connectivity matrix.
    """
    if scenario.firing.kind != "heaviside":
        raise ConfigError("limit solver needs a heaviside firing family "
                          "(see Scenario.with_heaviside)")
    if mode not in ("convention", "solve"):
        raise ConfigError(f"unknown at-threshold mode {mode!r}")
    if max_crossings < 0:
        raise ConfigError("max_crossings must be nonnegative")
    source = scenario.source if q_limit is None else q_limit
    if source.n != scenario.params.n:
        raise ConfigError("limit source dimension mismatch")
    if not source.is_piecewise_constant_limit():
        raise ConfigError(
            "limit solver needs a piecewise-constant limit drive "
            "(constant, zero-order-hold tabulated, or threshold-advanced)"
        )

    p = scenario.params
    conv = scenario.firing.heaviside_zero_value
    u_theta = p.u_theta
    tau = p.tau
    omega = p.omega
    t_end = p.t_end
    thr_tol = 1e-12 * max(1.0, abs(u_theta))
    time_snap = 1e-14 * max(1.0, t_end)

    q_bps = np.asarray(source.breakpoints(math.inf), dtype=float)
    q_bps = np.sort(q_bps[(q_bps > 0.0) & (q_bps < t_end)])
    pending_bps = list(q_bps)

    active_col = np.any(np.abs(omega) > 0.0, axis=0)

    bounds = [0.0]
    seg_starts, seg_targets, z_rows = [], [], []
    crossings: list[CrossingEvent] = []
    n_crossings = 0

    t = 0.0
    v = p.u_init.copy()
    d_left = None
    while t < t_end - time_snap:
        at_thr = np.abs(v - u_theta) <= thr_tol
        v[at_thr] = u_theta

        next_bp = pending_bps[0] if pending_bps else t_end
        q_now = source.eval(math.inf, 0.5 * (t + next_bp))

        s = _firing_vector(v, u_theta, at_thr, conv, mode, omega, tau, q_now, d_left)
        target = omega @ s + q_now

        for j in np.flatnonzero(at_thr):
            gap = target[j] - u_theta
            if abs(gap) <= thr_tol:
                # exact stationarity keeps the at-threshold set recognizable
                target[j] = u_theta
            if not active_col[j]:
                continue
            if abs(gap) <= thr_tol:
                ok = abs(s[j] - conv) <= 1e-9
                where = "stays at threshold"
            elif gap > 0.0:
                ok = abs(s[j] - 1.0) <= 1e-9
                where = "departs upward"
            else:
                ok = abs(s[j]) <= 1e-9
                where = "departs downward"
            if not ok:
                raise RightSmoothError(
                    f"component {j} {where} at t={t:.6g} but was assigned "
                    f"firing value {s[j]:.6g}; no right-smooth continuation"
                )

        # exact first crossing of any component on this segment
        t_next = next_bp
        crossing_dt = np.full(p.n, math.inf)
        amp = v - target
        for j in range(p.n):
            if abs(amp[j]) <= thr_tol:
                continue
            rho = (u_theta - target[j]) / amp[j]
            if 0.0 < rho < 1.0:
                crossing_dt[j] = -tau[j] * math.log(rho)
        dt_min = float(np.min(crossing_dt))
        hit = []
        if t + dt_min < t_next - time_snap:
            t_next = t + dt_min
            hit = list(np.flatnonzero(crossing_dt <= dt_min * (1.0 + 1e-12)))

        bounds.append(t_next)
        seg_starts.append(v.copy())
        seg_targets.append(target.copy())
        z_rows.append(s.copy())

        v = target + (v - target) * np.exp(-(t_next - t) / tau)
        d_left = (target - v) / tau
        for j in hit:
            v[j] = u_theta
            direction = "upward" if target[j] > u_theta else "downward"
            crossings.append(CrossingEvent(float(t_next), int(j), direction))
        n_crossings += len(hit)
        if n_crossings > max_crossings:
            raise CrossingBudgetError(
                f"crossing budget exceeded ({max_crossings}); the limit may "
                "not attain the threshold finitely often"
            )
        while pending_bps and pending_bps[0] <= t_next + time_snap:
            pending_bps.pop(0)
        t = t_next

    bounds[-1] = t_end
    traj = PiecewiseExpTrajectory(
        np.array(bounds),
        np.array(seg_starts),
        np.array(seg_targets),
        tau,
        name=f"{scenario.name or 'scenario'}@beta=inf",
    )

    # right-continuity audit: the right derivative at every boundary must
    # reproduce the segment's own ODE value
    for k, a in enumerate(bounds[:-1]):
        lhs = traj.derivative(a)
        rhs_val = (seg_targets[k] - seg_starts[k]) / tau
        if not np.allclose(lhs, rhs_val, rtol=1e-9, atol=1e-12):
            raise NumericalError("right-derivative audit failed at a boundary")

    return HeavisideSolution(
        trajectory=traj,
        crossings=tuple(crossings),
        z_values=np.array(z_rows),
        boundary_times=np.array(bounds[:-1]),
    )
