"""Built-in scenarios and the closed forms that serve as oracles.

Three worked setups share the defaults u_theta = 0.6, omega = 1.2,
tau = 1, T = 5, u(0) = u_theta:

* ``multi-solution``      -- scalar Heaviside-limit problem that admits the
  closed forms ``v1``, ``v2`` and (for omega = 2 u_theta with zero value
  1/2) the stationary ``v3``;
* ``alt-subseq``          -- the same network driven through the
  parity-shifted ramp family, whose even/odd steepness subsequences land
  on ``v1``/``v2`` respectively;
* ``threshold-advanced``  -- a drive engineered so the solution hugs the
  threshold forever and the steepness limit fails the limit problem.

``decay`` (omega = 0, u(0) = 1) is the uncoupled exponential oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .firing import PWL, FiringRateFamily, parse_firing
from .model import ConstantSource, NetworkParams, Scenario, ThresholdAdvancedSource
from .trajectory import FunctionTrajectory, Trajectory

BUILTIN_SCENARIOS = ("multi-solution", "alt-subseq", "threshold-advanced", "decay")

_DEFAULTS = {"u_theta": 0.6, "omega": 1.2, "t_end": 5.0, "tau": 1.0}

_NAMES = ("v1", "v2", "v3", "decay", "z_beta", "q_beta", "q_infty")


@dataclass(frozen=True)
class ClosedForm:
    """One named closed-form curve with its defining parameters.

    v1      omega + (u_theta - omega) * exp(-t/tau)
    v2      u_theta * exp(-t/tau)
    v3      u_theta (stationary)
    decay   amplitude * exp(-t/tau)
    z_beta  (1/beta) * ramp_beta(2t - 1/beta) + u_theta   (saturated ramp)
    q_beta  the threshold-advanced drive at finite beta
    q_infty its infinite-steepness limit
    """

    name: str
    omega: float = 0.0
    u_theta: float = 0.0
    tau: float = 1.0
    beta: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.name not in _NAMES:
            raise ConfigError(f"unknown closed form {self.name!r}")
        if self.name in ("z_beta", "q_beta") and not (
            self.beta is not None and self.beta >= 1
        ):
            raise ConfigError(f"{self.name} needs finite beta >= 1")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.name == "v1":
            return self.omega + (self.u_theta - self.omega) * np.exp(-t / self.tau)
        if self.name == "v2":
            return self.u_theta * np.exp(-t / self.tau)
        if self.name == "v3":
            return np.full_like(t, self.u_theta)
        if self.name == "decay":
            return self.amplitude * np.exp(-t / self.tau)
        if self.name == "z_beta":
            ramp = FiringRateFamily(PWL)
            return self.u_theta + ramp.eval(self.beta, 2.0 * t - 1.0 / self.beta) / self.beta
        if self.name == "q_beta":
            # right-continuous at the jump t = 1/beta (see breakpoints())
            bp = 1.0 / self.beta
            ramp = 1.0 + t + self.u_theta - self.omega * (0.5 + 0.5 * self.beta * t)
            flat = (self.u_theta + bp) - self.omega
            return np.where(t < bp, ramp, flat)
        return np.where(t > 0.0, self.u_theta - self.omega,
                        1.0 + self.u_theta - self.omega)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.name == "v1":
            return (self.omega - self.u_theta) / self.tau * np.exp(-t / self.tau)
        if self.name == "v2":
            return -self.u_theta / self.tau * np.exp(-t / self.tau)
        if self.name in ("v3", "q_infty"):
            return np.zeros_like(t)
        if self.name == "decay":
            return -self.amplitude / self.tau * np.exp(-t / self.tau)
        if self.name == "z_beta":
            return np.where(t < 1.0 / self.beta, 1.0, 0.0)
        return np.where(t < 1.0 / self.beta, 1.0 - 0.5 * self.omega * self.beta, 0.0)

    def breakpoints(self):
        if self.name in ("z_beta", "q_beta"):
            return (1.0 / self.beta,)
        return ()

    def trajectory(self, t_end: float) -> FunctionTrajectory:
        return FunctionTrajectory(
            self, self.derivative, n=1, t_end=t_end,
            breakpoints=self.breakpoints(), name=self.name,
        )


def closed_form_eval(cf: ClosedForm, t):
    """Evaluate a closed form; scalar in, scalar out."""
    out = cf(np.asarray(t, dtype=float))
    return float(out) if np.ndim(t) == 0 else out


# ----------------------------------------------------------------------
# built-in scenarios
# ----------------------------------------------------------------------

def builtin(name: str, *, omega=None, u_theta=None, t_end=None, firing=None) -> Scenario:
    """Fully parameterized built-in scenario, with optional overrides.

    ``firing`` accepts a family code string ("pwl", "shifted:tanh",
    "heaviside@0.5", ...).  The three threshold setups keep u(0) pinned to
    u_theta; ``decay`` starts at 1 with zero connectivity.
    """
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError(
            f"unknown scenario {name!r}; built-ins: {', '.join(BUILTIN_SCENARIOS)}"
        )
    w = _DEFAULTS["omega"] if omega is None else float(omega)
    th = _DEFAULTS["u_theta"] if u_theta is None else float(u_theta)
    horizon = _DEFAULTS["t_end"] if t_end is None else float(t_end)
    tau = _DEFAULTS["tau"]

    if name == "decay":
        params = NetworkParams(n=1, tau=tau, omega=0.0, u_theta=th,
                               u_init=1.0, t_end=horizon)
        fam = parse_firing(firing) if firing else FiringRateFamily("tanh")
        return Scenario(params, fam, ConstantSource([0.0]), name=name)

    if name in ("multi-solution", "alt-subseq") and not (w > th >= 0.0):
        raise ConfigError(f"{name} requires omega > u_theta >= 0")

    params = NetworkParams(n=1, tau=tau, omega=w, u_theta=th,
                           u_init=th, t_end=horizon)
    if name == "multi-solution":
        fam = parse_firing(firing) if firing else FiringRateFamily("heaviside")
        return Scenario(params, fam, ConstantSource([0.0]), name=name)
    if name == "alt-subseq":
        fam = parse_firing(firing) if firing else parse_firing("shifted:pwl")
        return Scenario(params, fam, ConstantSource([0.0]), name=name)
    fam = parse_firing(firing) if firing else FiringRateFamily(PWL)
    source = ThresholdAdvancedSource(w, th)
    return Scenario(params, fam, source, name=name)


# ----------------------------------------------------------------------
# candidate limits for sweep matching
# ----------------------------------------------------------------------

def limit_candidates(scenario: Scenario) -> list[tuple[str, Trajectory]]:
    """Closed-form limit shapes a sweep may match its clusters against.

    For scalar networks these are v1, v2, and the constant-at-threshold
    curve (labelled ``v3`` only when it genuinely solves the undriven
    limit problem: omega = 2 u_theta, zero value 1/2, zero limit drive).
    Zero-connectivity networks of any size additionally register the pure
    initial-value decay.
    """
    p = scenario.params
    t_end = p.t_end
    out: list[tuple[str, Trajectory]] = []

    probe = scenario.source.eval(math.inf, np.linspace(0.0, t_end, 257)[1:])
    zero_drive = bool(np.all(probe == 0.0))

    if p.n == 1:
        w = float(p.omega[0, 0])
        tau0 = float(p.tau[0])
        out.append(("v1", ClosedForm("v1", omega=w, u_theta=p.u_theta,
                                     tau=tau0).trajectory(t_end)))
        out.append(("v2", ClosedForm("v2", u_theta=p.u_theta, tau=tau0).trajectory(t_end)))
        genuine = (
            abs(w - 2.0 * p.u_theta) < 1e-12
            and abs(scenario.firing.heaviside_zero_value - 0.5) < 1e-12
            and zero_drive
        )
        label = "v3" if genuine else "const-u-theta"
        out.append((label, ClosedForm("v3", u_theta=p.u_theta).trajectory(t_end)))

    if np.all(p.omega == 0.0) and zero_drive:
        u0 = p.u_init.copy()
        tau = p.tau.copy()

        def fn(t, _u0=u0, _tau=tau):
            return _u0 * np.exp(-t[:, None] / _tau)

        def dfn(t, _u0=u0, _tau=tau):
            return -(_u0 / _tau) * np.exp(-t[:, None] / _tau)

        out.append(("decay", FunctionTrajectory(fn, dfn, n=p.n, t_end=t_end,
                                                name="decay")))
    return out
