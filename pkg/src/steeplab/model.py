"""Network model: parameters, steepness-indexed sources, scenario bundles.

The governing system for N coupled units is

    tau_i u_i'(t) = -u_i(t) + sum_j omega_ij * S_beta(u_j(t) - u_theta) + q_i(t)

on (0, T] with u(0) = u_init.  Sources may depend on the steepness
parameter; every kind also evaluates its infinite-steepness limit and
declares its jump locations so integration and quadrature can split there
instead of smearing them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .firing import PWL, FiringRateFamily, firing_code, parse_firing
from .quadrature import build_grid, cumulative_midpoint, midpoints


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _check_beta(beta) -> float:
    beta = float(beta)
    if math.isinf(beta):
        return beta
    if not (np.isfinite(beta) and beta >= 1.0):
        raise ConfigError(f"steepness must satisfy beta >= 1, got {beta!r}")
    return beta


# ----------------------------------------------------------------------
# network parameters
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NetworkParams:
    """Sizes, time constants, connectivity, threshold, initial state, horizon."""

    n: int
    tau: np.ndarray
    omega: np.ndarray
    u_theta: float
    u_init: np.ndarray
    t_end: float

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ConfigError("need at least one unit")
        tau = np.asarray(self.tau, dtype=float)
        if tau.ndim == 0:
            tau = np.full(n, float(tau))
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim == 0:
            omega = np.array([[float(omega)]])
        u_init = np.asarray(self.u_init, dtype=float)
        if u_init.ndim == 0:
            u_init = np.full(n, float(u_init))
        if tau.shape != (n,) or u_init.shape != (n,) or omega.shape != (n, n):
            raise ConfigError(
                f"dimension mismatch: n={n}, tau{tau.shape}, "
                f"omega{omega.shape}, u_init{u_init.shape}"
            )
        if not np.all(np.isfinite(tau)) or np.any(tau <= 0.0):
            raise ConfigError("membrane time constants must be positive and finite")
        for label, value in (("omega", omega), ("u_init", u_init)):
            if not np.all(np.isfinite(value)):
                raise ConfigError(f"{label} must be finite")
        if not (np.isfinite(self.u_theta) and np.isfinite(self.t_end)):
            raise ConfigError("u_theta and T must be finite")
        if not self.t_end > 0.0:
            raise ConfigError("time horizon must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "tau", _freeze(tau))
        object.__setattr__(self, "omega", _freeze(omega))
        object.__setattr__(self, "u_theta", float(self.u_theta))
        object.__setattr__(self, "u_init", _freeze(u_init))
        object.__setattr__(self, "t_end", float(self.t_end))

    def max_row_sum(self) -> float:
        return float(np.max(np.sum(np.abs(self.omega), axis=1)))


# ----------------------------------------------------------------------
# source families
# ----------------------------------------------------------------------

class SourceFamily:
    """External drive q_beta(t), with a limit evaluation at beta = inf.

    ``eval`` returns shape (n,) for scalar t and (m, n) for an array of m
    times.  ``side`` selects the branch at a jump location: "+" (default)
    is the right-continuous value, "-" the left limit; away from jumps the
    two agree.
    """

    kind = "abstract"
    n = 0

    def eval(self, beta, t, side: str = "+") -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, beta) -> np.ndarray:
        return np.empty(0)

    def measure_zero_times(self, beta) -> tuple:
        """Times where the declared value is a measure-zero convention."""
        return ()

    def bound(self) -> float:
        raise NotImplementedError

    def is_piecewise_constant_limit(self) -> bool:
        return False

    def to_config(self) -> dict:
        raise NotImplementedError

    def _shape(self, t, values_fn):
        arr = np.asarray(t, dtype=float)
        scalar = arr.ndim == 0
        out = values_fn(np.atleast_1d(arr))
        return out[0] if scalar else out

    @staticmethod
    def from_config(cfg: dict) -> "SourceFamily":
        kind = cfg.get("kind")
        if kind == "constant":
            return ConstantSource(cfg["c"])
        if kind == "tabulated":
            return TabulatedSource(cfg["t"], cfg["values"], cfg.get("interp", "linear"))
        if kind == "threshold-advanced":
            firing = parse_firing(cfg.get("firing", PWL))
            return ThresholdAdvancedSource(cfg["omega"], cfg["u_theta"], firing)
        raise ConfigError(f"unknown source kind {kind!r}")


class ConstantSource(SourceFamily):
    kind = "constant"

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 0:
            values = values[None]
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise ConfigError("constant source needs a finite vector")
        self.values = _freeze(values)
        self.n = values.size

    def eval(self, beta, t, side="+"):
        _check_beta(beta)
        return self._shape(t, lambda ts: np.broadcast_to(self.values, (ts.size, self.n)).copy())

    def bound(self):
        return float(np.max(np.abs(self.values))) if self.n else 0.0

    def is_piecewise_constant_limit(self):
        return True

    def to_config(self):
        return {"kind": self.kind, "c": [float(v) for v in self.values]}


class TabulatedSource(SourceFamily):
    """Drive given on a time grid, independent of the steepness parameter.

    ``interp="linear"`` joins samples continuously; ``interp="previous"``
    holds each sample until the next grid time (a piecewise-constant,
    right-continuous drive).
    """

    kind = "tabulated"

    def __init__(self, times, values, interp="linear"):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ConfigError("tabulated source needs strictly increasing times")
        if values.shape[0] != times.size or not np.all(np.isfinite(values)):
            raise ConfigError("tabulated values must be finite, one row per time")
        if interp not in ("linear", "previous"):
            raise ConfigError(f"unknown interpolation {interp!r}")
        self.times = _freeze(times)
        self.values = _freeze(values)
        self.interp = interp
        self.n = values.shape[1]

    def eval(self, beta, t, side="+"):
        _check_beta(beta)

        def values_at(ts):
            if self.interp == "linear":
                cols = [np.interp(ts, self.times, self.values[:, j]) for j in range(self.n)]
                return np.stack(cols, axis=1)
            search_side = "right" if side == "+" else "left"
            idx = np.searchsorted(self.times, ts, side=search_side) - 1
            idx = np.clip(idx, 0, self.times.size - 1)
            return self.values[idx]

        return self._shape(t, values_at)

    def breakpoints(self, beta):
        return self.times[1:-1].copy()

    def bound(self):
        return float(np.max(np.abs(self.values)))

    def is_piecewise_constant_limit(self):
        return self.interp == "previous"

    def to_config(self):
        return {
            "kind": self.kind,
            "t": [float(v) for v in self.times],
            "values": [[float(v) for v in row] for row in self.values],
            "interp": self.interp,
        }


class ThresholdAdvancedSource(SourceFamily):
    """Scalar drive engineered so the response hugs the firing threshold.

    For finite beta the drive ramps on [0, 1/beta) and is constant after:

        q_beta(t) = 1 + t + u_theta - omega * (1/2 + beta*t/2),  t in [0, 1/beta)
        q_beta(t) = 1/beta + u_theta - omega,                    t >  1/beta

    with a downward jump of size one at t = 1/beta.  The limit drive is the
    constant ``u_theta - omega`` for t > 0; its declared value at t = 0,
    ``1 + u_theta - omega``, is a measure-zero convention that never enters
    an integral.  The construction relies on the exact saturation of the
    piecewise-linear firing family, which is therefore required.
    """

    kind = "threshold-advanced"

    def __init__(self, omega: float, u_theta: float, firing: FiringRateFamily | None = None):
        if firing is None:
            firing = FiringRateFamily(PWL)
        if firing.kind != PWL:
            raise ConfigError(
                "threshold-advanced source requires the piecewise-linear firing family"
            )
        if not (np.isfinite(omega) and np.isfinite(u_theta)):
            raise ConfigError("omega and u_theta must be finite")
        self.omega = float(omega)
        self.u_theta = float(u_theta)
        self.firing = firing
        self.n = 1

    def eval(self, beta, t, side="+"):
        beta = _check_beta(beta)

        def values_at(ts):
            if math.isinf(beta):
                vals = np.where(ts > 0.0, self.u_theta - self.omega,
                                1.0 + self.u_theta - self.omega)
            else:
                bp = 1.0 / beta
                ramp = 1.0 + ts + self.u_theta - self.omega * (0.5 + 0.5 * beta * ts)
                # association (u_theta + bp) - omega keeps the plateau state
                # u_theta + 1/beta an exact fixed point of the computed rhs
                flat = (self.u_theta + bp) - self.omega
                on_ramp = ts < bp if side == "+" else ts <= bp
                vals = np.where(on_ramp, ramp, flat)
            return vals[:, None]

        return self._shape(t, values_at)

    def breakpoints(self, beta):
        beta = _check_beta(beta)
        if math.isinf(beta):
            return np.empty(0)
        return np.array([1.0 / beta])

    def measure_zero_times(self, beta):
        return (0.0,) if math.isinf(float(beta)) else ()

    def bound(self):
        return 2.0 + abs(self.u_theta) + abs(self.omega)

    def is_piecewise_constant_limit(self):
        return True

    def to_config(self):
        return {
            "kind": self.kind,
            "omega": self.omega,
            "u_theta": self.u_theta,
            "firing": firing_code(self.firing),
        }


# ----------------------------------------------------------------------
# scenario
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable bundle of network parameters, firing family, and drive."""

    params: NetworkParams
    firing: FiringRateFamily
    source: SourceFamily
    name: str = ""

    def __post_init__(self):
        if self.source.n != self.params.n:
            raise ConfigError(
                f"source dimension {self.source.n} != network size {self.params.n}"
            )
        if isinstance(self.source, TabulatedSource):
            times = self.source.times
            if times[0] > 0.0 or times[-1] < self.params.t_end:
                raise ConfigError("tabulated source must cover [0, T]")

    def with_heaviside(self, zero_value: float) -> "Scenario":
        """Same scenario with the firing family replaced by its step limit."""
        fam = FiringRateFamily("heaviside", heaviside_zero_value=float(zero_value))
        return Scenario(self.params, fam, self.source, self.name)

    def with_t_end(self, t_end: float) -> "Scenario":
        return Scenario(replace(self.params, t_end=float(t_end)),
                        self.firing, self.source, self.name)

    def to_config(self) -> dict:
        p = self.params
        return {
            "name": self.name,
            "N": p.n,
            "tau": [float(v) for v in p.tau],
            "omega": [[float(v) for v in row] for row in p.omega],
            "u_theta": p.u_theta,
            "u_init": [float(v) for v in p.u_init],
            "T": p.t_end,
            "firing": firing_code(self.firing),
            "source": self.source.to_config(),
        }

    @staticmethod
    def from_config(cfg: dict) -> "Scenario":
        try:
            params = NetworkParams(
                n=cfg["N"], tau=cfg["tau"], omega=cfg["omega"],
                u_theta=cfg["u_theta"], u_init=cfg["u_init"], t_end=cfg["T"],
            )
            firing = parse_firing(cfg["firing"])
            source = SourceFamily.from_config(cfg["source"])
        except KeyError as exc:
            raise ConfigError(f"scenario config missing key {exc.args[0]!r}") from exc
        return Scenario(params, firing, source, name=str(cfg.get("name", "")))


def save_scenario(path, scenario: Scenario) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_config(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not a valid scenario config: {exc}") from exc
    return Scenario.from_config(cfg)


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------

def rhs(scenario: Scenario, beta, t: float, u, side: str = "+") -> np.ndarray:
    """Time derivative of the potentials at state ``u``.

    Infinite beta follows the firing family's limit contract: it is only
    valid when the scenario carries a heaviside family.
    """
    p = scenario.params
    u = np.asarray(u, dtype=float)
    if u.shape != (p.n,):
        raise ConfigError(f"state has shape {u.shape}, expected ({p.n},)")
    rates = scenario.firing.eval(beta, u - p.u_theta)
    drive = scenario.source.eval(beta, t, side)
    return (-u + scenario.params.omega @ rates + drive) / p.tau


def uniform_bound(scenario: Scenario, b: float) -> float:
    """A priori sup-norm bound: ||u_init||_inf + max row sum |omega| + B."""
    if b < 0.0:
        raise ConfigError("source bound B must be nonnegative")
    p = scenario.params
    return float(np.max(np.abs(p.u_init)) + p.max_row_sum() + b)


@dataclass(frozen=True)
class AssumptionBReport:
    bound: float
    pointwise_dev: float
    integral_dev: float
    passed: bool
    detail: str = ""
    pointwise_by_beta: tuple = ()
    integral_by_beta: tuple = ()


def check_assumption_B(source: SourceFamily, betas, t_grid) -> AssumptionBReport:
    """Sampled boundedness and limit-consistency check of a source family.

    Reports the sampled sup norm B, the pointwise deviation from the limit
    drive at the largest beta, and the deviation of the running integrals
    (midpoint quadrature split at the declared jumps).  Declared
    measure-zero times are excluded from the pointwise comparison.  The
    check passes when everything is finite and both deviation sequences are
    nonincreasing along the beta grid.
    """
    betas = [int(b) for b in betas]
    if not betas or any(b < 1 for b in betas):
        raise ConfigError("beta grid must be nonempty with entries >= 1")
    betas = sorted(set(betas))
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid < 0.0):
        raise ConfigError("time grid must be nonempty and nonnegative")
    t_grid = np.unique(t_grid)
    t_max = float(t_grid[-1])
    if t_max <= 0.0:
        raise ConfigError("time grid must extend past zero")

    skip = np.zeros(t_grid.size, dtype=bool)
    for tz in source.measure_zero_times(math.inf):
        skip |= np.abs(t_grid - tz) <= 1e-15 * max(1.0, t_max)
    q_lim = source.eval(math.inf, t_grid)

    bound = 0.0
    pw, integ = [], []
    worst = None
    for b in betas:
        nodes = build_grid(0.0, t_max, max(1000, 4 * t_grid.size),
                           extra=np.concatenate([t_grid, source.breakpoints(b)]))
        sample = source.eval(b, nodes)
        if not np.all(np.isfinite(sample)):
            bad = nodes[~np.all(np.isfinite(sample), axis=1)][0]
            worst = (b, float(bad))
            break
        bound = max(bound, float(np.max(np.abs(sample))))
        dev = np.max(np.abs(source.eval(b, t_grid) - q_lim), axis=1)
        pw.append(float(np.max(dev[~skip])) if np.any(~skip) else 0.0)
        mids = midpoints(nodes)
        cum_b = cumulative_midpoint(nodes, source.eval(b, mids))
        cum_lim = cumulative_midpoint(nodes, source.eval(math.inf, mids))
        integ.append(float(np.max(np.abs(cum_b - cum_lim))))

    if worst is not None:
        return AssumptionBReport(
            bound=math.inf, pointwise_dev=math.inf, integral_dev=math.inf,
            passed=False, detail=f"non-finite drive at beta={worst[0]}, t={worst[1]:.6g}",
        )

    slack = 1e-12 + 1e-9 * (pw[0] + integ[0])
    monotone = all(b <= a + slack for a, b in zip(pw, pw[1:])) and all(
        b <= a + slack for a, b in zip(integ, integ[1:])
    )
    detail = "" if monotone else "deviations do not decrease along the beta grid"
    return AssumptionBReport(
        bound=bound,
        pointwise_dev=pw[-1],
        integral_dev=integ[-1],
        passed=monotone,
        detail=detail,
        pointwise_by_beta=tuple(pw),
        integral_by_beta=tuple(integ),
    )
