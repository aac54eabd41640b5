"""Trajectory types: dense numerical output, closed forms, piecewise segments.

Every trajectory is an immutable map from times in [t_start, t_end] to
state vectors, queryable at scalar or array times, with a one-sided right
derivative at its interior knots.  Queries outside the domain are
rejected.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


class Trajectory:
    """Common query interface; subclasses implement ``_value``/``_derivative``."""

    n: int = 0
    t_start: float = 0.0
    t_end: float = 0.0
    name: str = ""

    @property
    def breakpoints(self) -> np.ndarray:
        """Interior knot times (kinks, accepted steps, jump locations)."""
        return np.empty(0)

    @property
    def min_feature(self) -> float:
        """Smallest time scale the trajectory resolves (grid-adequacy hint)."""
        knots = self.breakpoints
        if knots.size == 0:
            return self.t_end - self.t_start
        gaps = np.diff(np.concatenate([[self.t_start], knots, [self.t_end]]))
        return float(np.min(gaps))

    def _prepare(self, t):
        arr = np.asarray(t, dtype=float)
        scalar = arr.ndim == 0
        flat = np.atleast_1d(arr).astype(float, copy=True)
        span = max(1.0, abs(self.t_end - self.t_start))
        tol = 1e-12 * span
        if flat.size and (flat.min() < self.t_start - tol or flat.max() > self.t_end + tol):
            raise ConfigError(
                f"time query outside [{self.t_start:g}, {self.t_end:g}]"
            )
        np.clip(flat, self.t_start, self.t_end, out=flat)
        return flat, scalar

    def value(self, t):
        flat, scalar = self._prepare(t)
        out = self._value(flat)
        return out[0] if scalar else out

    def derivative(self, t):
        flat, scalar = self._prepare(t)
        out = self._derivative(flat)
        return out[0] if scalar else out

    def grid(self, n: int) -> np.ndarray:
        from .quadrature import build_grid

        return build_grid(self.t_start, self.t_end, n, self.breakpoints)

    def _value(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _derivative(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class DenseOutputTrajectory(Trajectory):
    """Accepted integrator steps with a quartic interpolant per step.

    The interpolant is stored in the nested form

        u(theta) = y0 + theta*(A + (1-theta)*(B + theta*(C + (1-theta)*D)))

    with theta the step-local coordinate; by construction it reproduces
    the accepted endpoint states and slopes exactly, so values at step
    endpoints match the step solution bit for bit (queries at a node are
    evaluated on the right segment at theta = 0).
    """

    def __init__(self, times, states, coeffs, name=""):
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        coeffs = np.asarray(coeffs, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ConfigError("node times must be strictly increasing")
        if states.shape != (times.size, coeffs.shape[2]) or coeffs.shape[:2] != (
            times.size - 1,
            4,
        ):
            raise ConfigError("inconsistent dense-output arrays")
        self.node_times = times
        self.node_states = states
        self._coeffs = coeffs  # (steps, 4, n): rows A, B, C, D
        self._h = np.diff(times)
        self.n = states.shape[1]
        self.t_start = float(times[0])
        self.t_end = float(times[-1])
        self.name = name

    @property
    def breakpoints(self):
        return self.node_times[1:-1]

    def _segment(self, t):
        idx = np.searchsorted(self.node_times, t, side="right") - 1
        return np.clip(idx, 0, self.node_times.size - 2)

    def _value(self, t):
        idx = self._segment(t)
        theta = (t - self.node_times[idx]) / self._h[idx]
        a, b, c, d = (self._coeffs[idx, k] for k in range(4))
        th = theta[:, None]
        om = 1.0 - th
        out = self.node_states[idx] + th * (a + om * (b + th * (c + om * d)))
        at_end = t == self.node_times[-1]
        if np.any(at_end):
            out[at_end] = self.node_states[-1]
        return out

    def _derivative(self, t):
        idx = self._segment(t)
        theta = ((t - self.node_times[idx]) / self._h[idx])[:, None]
        a, b, c, d = (self._coeffs[idx, k] for k in range(4))
        dpoly = (
            a
            + b * (1.0 - 2.0 * theta)
            + c * (2.0 - 3.0 * theta) * theta
            + d * (2.0 - 6.0 * theta + 4.0 * theta**2) * theta
        )
        return dpoly / self._h[idx][:, None]


class FunctionTrajectory(Trajectory):
    """Closed-form trajectory from vectorized value/derivative callables."""

    def __init__(self, fn, dfn, n, t_end, t_start=0.0, breakpoints=(), name=""):
        self._fn = fn
        self._dfn = dfn
        self.n = int(n)
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        bp = np.asarray(breakpoints, dtype=float).ravel()
        self._breakpoints = np.sort(bp[(bp > self.t_start) & (bp < self.t_end)])
        self.name = name

    @property
    def breakpoints(self):
        return self._breakpoints

    def _normalize(self, out, m):
        out = np.asarray(out, dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (m, self.n):
            raise ConfigError("closed-form callable returned a bad shape")
        return out

    def _value(self, t):
        return self._normalize(self._fn(t), t.size)

    def _derivative(self, t):
        return self._normalize(self._dfn(t), t.size)


class PiecewiseExpTrajectory(Trajectory):
    """Exact affine-exponential segments between boundary times.

    On segment k the state relaxes componentwise toward a constant target:
    ``u(t) = target + (u(a_k) - target) * exp(-(t - a_k)/tau)``.
    """

    def __init__(self, bounds, seg_starts, seg_targets, tau, name=""):
        bounds = np.asarray(bounds, dtype=float)
        seg_starts = np.asarray(seg_starts, dtype=float)
        seg_targets = np.asarray(seg_targets, dtype=float)
        tau = np.asarray(tau, dtype=float)
        k = bounds.size - 1
        if k < 1 or np.any(np.diff(bounds) <= 0):
            raise ConfigError("segment bounds must be strictly increasing")
        if seg_starts.shape != (k, tau.size) or seg_targets.shape != (k, tau.size):
            raise ConfigError("inconsistent segment arrays")
        self._bounds = bounds
        self._starts = seg_starts
        self._targets = seg_targets
        self._tau = tau
        self.n = tau.size
        self.t_start = float(bounds[0])
        self.t_end = float(bounds[-1])
        self.name = name

    @property
    def breakpoints(self):
        return self._bounds[1:-1]

    def _segment(self, t):
        idx = np.searchsorted(self._bounds, t, side="right") - 1
        return np.clip(idx, 0, self._bounds.size - 2)

    def _value(self, t):
        idx = self._segment(t)
        decay = np.exp(-(t[:, None] - self._bounds[idx][:, None]) / self._tau)
        return self._targets[idx] + (self._starts[idx] - self._targets[idx]) * decay

    def _derivative(self, t):
        return (self._targets[self._segment(t)] - self._value(t)) / self._tau


class TabulatedTrajectory(Trajectory):
    """Sampled trajectory (for example re-ingested CSV), linearly interpolated."""

    def __init__(self, times, values, name=""):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ConfigError("sample times must be strictly increasing")
        if values.shape[0] != times.size:
            raise ConfigError("one value row per sample time required")
        self.times = times
        self.values = values
        self.n = values.shape[1]
        self.t_start = float(times[0])
        self.t_end = float(times[-1])
        self.name = name

    @property
    def breakpoints(self):
        return self.times[1:-1]

    def _value(self, t):
        cols = [np.interp(t, self.times, self.values[:, j]) for j in range(self.n)]
        return np.stack(cols, axis=1)

    def _derivative(self, t):
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0,
                      self.times.size - 2)
        dt = (self.times[idx + 1] - self.times[idx])[:, None]
        return (self.values[idx + 1] - self.values[idx]) / dt
