"""Deterministic file artifacts and figure rendering.

All delimited output uses 17-significant-digit decimal formatting (which
round-trips float64 exactly), JSON is written with sorted keys, and no
data file carries a timestamp, so identical runs produce byte-identical
CSV/JSON.  Figures are rendered to files with the Agg backend alongside
the delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import ConfigError  # noqa: E402
from .trajectory import TabulatedTrajectory, Trajectory  # noqa: E402


def fmt(x) -> str:
    return format(float(x), ".17g")


def fmt_beta(b) -> str:
    b = float(b)
    return str(int(b)) if b.is_integer() else format(b, ".17g")


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ----------------------------------------------------------------------
# trajectories
# ----------------------------------------------------------------------

def write_trajectory_csv(path, traj: Trajectory, n_samples: int = 1000) -> Path:
    """Header ``t,u_1,...,u_N``; rows at the trajectory knots plus a uniform fill."""
    path = _ensure_parent(path)
    times = traj.grid(n_samples)
    values = traj.value(times)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"u_{j + 1}" for j in range(traj.n)])
        for t, row in zip(times, values):
            writer.writerow([fmt(t)] + [fmt(v) for v in row])
    return path


def load_trajectory_csv(path) -> TabulatedTrajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t":
            raise ConfigError(f"{path}: expected a trajectory CSV with a 't' column")
        try:
            rows = [[float(v) for v in row] for row in reader if row]
        except ValueError as exc:
            raise ConfigError(f"{path}: malformed trajectory CSV: {exc}") from exc
    data = np.asarray(rows)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ConfigError(f"{path}: malformed trajectory CSV")
    return TabulatedTrajectory(data[:, 0], data[:, 1:], name=Path(path).stem)


def write_crossings_json(path, events) -> Path:
    path = _ensure_parent(path)
    payload = [
        {"t": e.t, "component": e.component, "direction": e.direction}
        for e in events
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_crossings_json(path):
    from .integrator import CrossingEvent

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [CrossingEvent(d["t"], d["component"], d["direction"]) for d in payload]


# ----------------------------------------------------------------------
# analysis artifacts
# ----------------------------------------------------------------------

def write_curve_csv(path, curve, columns) -> Path:
    path = _ensure_parent(path)
    curve = np.asarray(curve, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in np.atleast_2d(curve):
            writer.writerow([fmt(v) for v in row])
    return path


def write_diagnostics_json(path, diag) -> Path:
    path = _ensure_parent(path)
    payload = {
        "crossing_count": diag.crossing_count,
        "z_measure": diag.z_measure,
        "r_curve": [[d, m] for d, m in diag.r_curve],
        "classification": diag.classification,
        "resolution": diag.resolution,
        "warnings": list(diag.warnings),
        "events": [
            {"t": e.t, "component": e.component, "direction": e.direction}
            for e in diag.events
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def sweep_report_dict(report) -> dict:
    return {
        "betas": list(report.betas),
        "distance_matrix": [[float(v) for v in row] for row in report.distance_matrix],
        "clusters": [
            {
                "betas": list(c.betas),
                "match": c.match,
                "match_distance": c.match_distance,
                "diameter": c.diameter,
            }
            for c in report.clusters
        ],
        "entire_sequence_converges": report.entire_sequence_converges,
        "margin": report.margin,
        "warnings": list(report.warnings),
        "failures": {fmt(b): msg for b, msg in sorted(report.failures.items())},
    }


def write_sweep_json(path, report) -> Path:
    path = _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sweep_report_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_sweep_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------

def plot_trajectory(path, traj: Trajectory, u_theta=None, references=None,
                    title="") -> Path:
    path = _ensure_parent(path)
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    grid = traj.grid(2000)
    values = traj.value(grid)
    for j in range(traj.n):
        ax.plot(grid, values[:, j], lw=1.5,
                label=f"u_{j + 1}" if traj.n > 1 else "u")
    for name, ref in (references or {}).items():
        ax.plot(grid, ref.value(grid)[:, 0], "--", lw=1.0, label=name)
    if u_theta is not None:
        ax.axhline(u_theta, color="k", ls=":", lw=0.8, label="threshold")
    ax.set_xlabel("t")
    ax.set_ylabel("potential")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_sweep(path, report, u_theta=None, title="") -> Path:
    path = _ensure_parent(path)
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for b, traj in sorted(report.trajectories.items()):
        grid = traj.grid(2000)
        ax.plot(grid, traj.value(grid)[:, 0], lw=1.0, label=f"beta={fmt_beta(b)}")
    if u_theta is not None:
        ax.axhline(u_theta, color="k", ls=":", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("potential")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_residual(path, curve, title="") -> Path:
    path = _ensure_parent(path)
    curve = np.asarray(curve)
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    ax.plot(curve[:, 0], curve[:, 1], lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("integral-form residual")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_r_curve(path, r_curve, title="") -> Path:
    path = _ensure_parent(path)
    data = np.asarray(r_curve, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(data[:, 0], np.maximum(data[:, 1], 1e-300), "o-", lw=1.2)
    ax.set_xlabel("delta")
    ax.set_ylabel("time within delta of threshold")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
