"""Semantic exception hierarchy.

Configuration and contract violations raise :class:`ConfigError`; failures of
numerical procedures raise subclasses of :class:`NumericalError` so callers
(and the CLI exit-code mapping) can tell the two apart.
"""


class SteeplabError(Exception):
    """Base class for all steeplab errors."""


class ConfigError(SteeplabError, ValueError):
    """Invalid parameters, inconsistent dimensions, or a broken contract."""


class NumericalError(SteeplabError):
    """A numerical procedure failed; partial artifacts may still be useful."""


class IntegrationError(NumericalError):
    """Adaptive integration failed (non-finite values, step budget, ...)."""


class StepUnderflowError(IntegrationError):
    """Step size collapsed below the resolvable scale."""

    def __init__(self, t, detail=""):
        self.t = float(t)
        msg = f"stiffness/step underflow at t={self.t:.17g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ThresholdPlateauError(NumericalError):
    """A component sits exactly at the firing threshold on whole intervals.

    Carries the offending ``(component, t_lo, t_hi)`` triples; a plateau has
    no finite crossing list, so event detection refuses to produce one.
    """

    def __init__(self, intervals):
        self.intervals = tuple(intervals)
        spans = ", ".join(
            f"component {j} on [{a:.6g}, {b:.6g}]" for j, a, b in self.intervals
        )
        super().__init__(f"degenerate threshold plateau: {spans}")


class CrossingBudgetError(NumericalError):
    """Crossing budget exceeded; the trajectory may chatter at threshold."""


class SingularConnectivityError(NumericalError):
    """The connectivity matrix is singular where an inverse is required."""


class RightSmoothError(NumericalError):
    """No right-smooth continuation is consistent with the firing convention."""
