"""Firing-rate families: steep sigmoids, their Heaviside limit, tail checks.

A family maps a steepness parameter ``beta`` and a membrane argument ``x``
to a rate in [0, 1].  Two finite-steepness shapes are provided:

* ``tanh``  -- ``0.5 * (1 + tanh(beta * x))``, smooth for every beta;
* ``pwl``   -- the saturated ramp ``clip(0.5 + 0.5 * beta * x, 0, 1)``,
  exactly 0 below ``-1/beta`` and exactly 1 above ``1/beta``.

Both are nondecreasing, Lipschitz with constant ``beta / 2``, and converge
pointwise (off zero) to the Heaviside step as beta grows.  A ``shifted``
wrapper evaluates an inner family at ``x + (-1)**beta / (2 * beta)``, which
alternates the value near zero with the parity of beta while still passing
the tail check below.  The ``heaviside`` kind is the limit itself, with a
configurable value at exactly zero.

``check_assumption_A`` certifies the tail bounds

    S_beta(x) < eps        for x < -delta,
    1 - S_beta(x) < eps    for x >  delta,

for every steepness above a reported integer Q.  For the supported
monotone kinds the certificate reduces to an endpoint inequality that is
monotone in beta, so Q is found by exact integer search; the saturated
ramp is certified by its support width alone and its Q is independent
of eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TANH = "tanh"
PWL = "pwl"
SHIFTED = "shifted"
HEAVISIDE = "heaviside"

_FINITE_KINDS = (TANH, PWL, SHIFTED)
_SLOPE_FLOOR = 1e-3  # tanh slope below this counts as outside the transition layer
DEFAULT_BETA_CAP = 10**9


def _is_integer(beta: float) -> bool:
    return float(beta).is_integer()


@dataclass(frozen=True)
class FiringRateFamily:
    """Immutable descriptor of one firing-rate family.

    ``heaviside_zero_value`` is the value assigned at argument exactly zero.
    It is used directly by the ``heaviside`` kind and by the explicit
    pointwise-limit evaluation of the finite kinds; the default 0.5 is the
    standard symmetric convention.
    """

    kind: str
    inner: "FiringRateFamily | None" = None
    heaviside_zero_value: float = 0.5

    def __post_init__(self):
        if self.kind not in (_FINITE_KINDS + (HEAVISIDE,)):
            raise ConfigError(f"unknown firing-rate kind {self.kind!r}")
        if self.kind == SHIFTED:
            if self.inner is None or self.inner.kind not in (TANH, PWL):
                raise ConfigError("shifted wrapper needs a tanh or pwl inner family")
        elif self.inner is not None:
            raise ConfigError(f"kind {self.kind!r} takes no inner family")
        zv = self.heaviside_zero_value
        if not (np.isfinite(zv) and 0.0 <= zv <= 1.0):
            raise ConfigError("heaviside_zero_value must lie in [0, 1]")

    # ------------------------------------------------------------------
    @property
    def is_finite_kind(self) -> bool:
        return self.kind != HEAVISIDE

    def limit(self) -> "FiringRateFamily":
        """Heaviside family with this family's value at zero."""
        return FiringRateFamily(HEAVISIDE, heaviside_zero_value=self.heaviside_zero_value)

    def eval(self, beta, x, *, allow_limit: bool = False):
        """Rate at argument ``x`` for steepness ``beta``.

        ``beta`` may be any real >= 1 (the shifted wrapper insists on an
        integer, since its parity shift is undefined otherwise) or
        ``math.inf``.  Infinite beta on a finite-steepness kind is an error
        unless ``allow_limit=True`` explicitly requests the pointwise limit,
        which is the Heaviside step with this family's value at zero.

        Scalar ``x`` returns a float; array ``x`` returns an array.
        """
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        out = self._eval_array(beta, np.atleast_1d(arr), allow_limit)
        return float(out[0]) if scalar else out

    def _eval_array(self, beta, x: np.ndarray, allow_limit: bool) -> np.ndarray:
        if self.kind == HEAVISIDE:
            return self._step(x)
        if math.isinf(beta):
            if not allow_limit:
                raise ConfigError(
                    "beta = inf on a finite-steepness family; request the "
                    "pointwise limit explicitly (allow_limit=True) or use a "
                    "heaviside family"
                )
            return self._step(x)
        beta = float(beta)
        if not (np.isfinite(beta) and beta >= 1.0):
            raise ConfigError(f"steepness must satisfy beta >= 1, got {beta!r}")
        if self.kind == TANH:
            return 0.5 * (1.0 + np.tanh(beta * x))
        if self.kind == PWL:
            return np.clip(0.5 + 0.5 * beta * x, 0.0, 1.0)
        # shifted wrapper
        if not _is_integer(beta):
            raise ConfigError("shifted wrapper requires integer beta (parity shift)")
        shift = (-1.0) ** int(beta) / (2.0 * beta)
        return self.inner._eval_array(beta, x + shift, allow_limit)

    def _step(self, x: np.ndarray) -> np.ndarray:
        return np.where(x > 0.0, 1.0, np.where(x < 0.0, 0.0, self.heaviside_zero_value))

    # ------------------------------------------------------------------
    def lipschitz_bound(self, beta: float) -> float:
        """Upper bound on the slope in ``x`` (beta / 2 for the finite kinds)."""
        if self.kind == HEAVISIDE:
            return math.inf
        return 0.5 * float(beta)

    def layer_halfwidth(self, beta: float) -> float:
        """Half-width of the transition layer around argument zero.

        For the ramp this is the support half-width ``1/beta``; for the
        tanh shape it is the region where the slope exceeds a small floor;
        the shifted wrapper adds its worst-case shift magnitude.
        """
        if self.kind == HEAVISIDE:
            return 0.0
        beta = float(beta)
        if self.kind == PWL:
            return 1.0 / beta
        if self.kind == TANH:
            return math.acosh(math.sqrt(beta / (2.0 * _SLOPE_FLOOR))) / beta
        return self.inner.layer_halfwidth(beta) + 0.5 / beta

    def saturation_offsets(self, beta: float) -> tuple:
        """Arguments where the rate becomes exactly 0 or 1 (ramp kinks).

        Empty for smooth kinds; constructed drives can make the solution
        ride these kinks, where the dynamics are one-sidedly unstable.
        """
        if self.kind == PWL:
            return (-1.0 / beta, 1.0 / beta)
        if self.kind == SHIFTED and self.inner.kind == PWL:
            if not _is_integer(beta):
                raise ConfigError("shifted wrapper requires integer beta")
            shift = (-1.0) ** int(beta) / (2.0 * beta)
            return (-1.0 / beta - shift, 1.0 / beta - shift)
        return ()


# ----------------------------------------------------------------------
# string codes used by scenario configuration files
# ----------------------------------------------------------------------

def firing_code(family: FiringRateFamily) -> str:
    if family.kind == SHIFTED:
        return f"shifted:{family.inner.kind}"
    if family.kind == HEAVISIDE:
        return f"heaviside@{family.heaviside_zero_value:g}"
    return family.kind


def parse_firing(code: str) -> FiringRateFamily:
    """Parse a family code: tanh, pwl, shifted:tanh, shifted:pwl, heaviside@v."""
    code = code.strip()
    if code in (TANH, PWL):
        return FiringRateFamily(code)
    if code.startswith("shifted:"):
        inner = code.split(":", 1)[1]
        if inner not in (TANH, PWL):
            raise ConfigError(f"unknown inner family in {code!r}")
        return FiringRateFamily(SHIFTED, inner=FiringRateFamily(inner))
    if code == HEAVISIDE:
        return FiringRateFamily(HEAVISIDE)
    if code.startswith("heaviside@"):
        try:
            zv = float(code.split("@", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad heaviside zero value in {code!r}") from exc
        return FiringRateFamily(HEAVISIDE, heaviside_zero_value=zv)
    raise ConfigError(f"unknown firing-rate code {code!r}")


# ----------------------------------------------------------------------
# tail certification
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionAReport:
    q: int | None
    passed: bool
    detail: str = ""


def _tails_certified(family: FiringRateFamily, beta: int, eps: float, delta: float) -> bool:
    """True when monotone endpoint evaluation certifies both tail bounds.

    All supported finite kinds are odd-symmetric around zero, so the left
    and right tails share one inequality.  The shifted wrapper is checked
    at the worst-case parity (shift magnitude 1/(2 beta) toward the tail).
    """
    if family.kind == PWL:
        return 1.0 / beta <= delta
    if family.kind == TANH:
        return 0.5 * (1.0 - math.tanh(beta * delta)) < eps
    inner = family.inner.kind
    if inner == PWL:
        return 1.5 / beta <= delta
    return 0.5 * (1.0 - math.tanh(beta * delta - 0.5)) < eps


def check_assumption_A(
    family: FiringRateFamily,
    eps: float,
    delta: float,
    *,
    beta_cap: int = DEFAULT_BETA_CAP,
) -> AssumptionAReport:
    """Smallest certified steepness Q for the tail bounds at (eps, delta).

    Every beta >= Q satisfies both bounds (the certificate is monotone in
    beta).  For the saturated ramp Q equals ``ceil(1/delta)`` regardless of
    eps, because outside the support the rate is exactly 0 or 1.  Returns
    ``passed=False`` with a diagnostic when no Q at or below ``beta_cap``
    certifies the bounds.
    """
    if not (0.0 < eps < 1.0):
        raise ConfigError("eps must lie in (0, 1)")
    if not delta > 0.0:
        raise ConfigError("delta must be positive")
    if not family.is_finite_kind:
        raise ConfigError("tail check applies to finite-steepness families only")
    if family.kind not in _FINITE_KINDS:  # pragma: no cover - closed kind set
        raise ConfigError("cannot certify tails")

    if not _tails_certified(family, beta_cap, eps, delta):
        return AssumptionAReport(
            q=None,
            passed=False,
            detail=f"no steepness at or below the cap {beta_cap} certifies "
            f"(eps={eps:g}, delta={delta:g})",
        )
    lo, hi = 0, 1
    while not _tails_certified(family, hi, eps, delta):
        lo, hi = hi, min(hi * 2, beta_cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _tails_certified(family, mid, eps, delta):
            hi = mid
        else:
            lo = mid
    return AssumptionAReport(
        q=hi,
        passed=True,
        detail=f"tail bounds hold for every beta >= {hi}",
    )
