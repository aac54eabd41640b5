"""Breakpoint-aware composite quadrature on [t0, t1].

The cumulative rule samples every interval at its midpoint.  With the grid
split at all jump locations this is exact for integrands that are constant
or linear on each interval, and the values a piecewise-constant integrand
takes on its measure-zero jump set never enter the sum.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def build_grid(t0: float, t1: float, n: int, extra=()) -> np.ndarray:
    """Uniform grid of ``n`` intervals on [t0, t1] augmented with extra nodes.

    Extra nodes outside (t0, t1) are dropped and near-duplicates (within
    1e-14 of the span) are merged so every interval keeps positive width.
    """
    if not t1 > t0:
        raise ConfigError(f"empty time span [{t0}, {t1}]")
    if n < 1:
        raise ConfigError("grid needs at least one interval")
    nodes = np.linspace(t0, t1, n + 1)
    extra = np.asarray(extra, dtype=float).ravel()
    if extra.size:
        extra = extra[(extra > t0) & (extra < t1)]
        if extra.size:
            nodes = np.union1d(nodes, extra)
    keep = np.empty(nodes.size, dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(nodes) > 1e-14 * (t1 - t0)
    nodes = nodes[keep]
    nodes[-1] = t1
    return nodes


def midpoints(nodes: np.ndarray) -> np.ndarray:
    return 0.5 * (nodes[:-1] + nodes[1:])


def cumulative_midpoint(nodes: np.ndarray, mid_values: np.ndarray) -> np.ndarray:
    """Cumulative integral at the nodes from one midpoint sample per interval.

    ``mid_values`` has shape (m,) or (m, k) for m = len(nodes) - 1; the
    result has the matching shape with a leading row/entry of zeros.
    """
    widths = np.diff(nodes)
    mid_values = np.asarray(mid_values, dtype=float)
    if mid_values.shape[0] != widths.size:
        raise ConfigError("one midpoint sample per interval required")
    if mid_values.ndim == 1:
        out = np.empty(nodes.size)
        out[0] = 0.0
        np.cumsum(widths * mid_values, out=out[1:])
    else:
        out = np.zeros((nodes.size,) + mid_values.shape[1:])
        np.cumsum(widths[:, None] * mid_values, axis=0, out=out[1:])
    return out
