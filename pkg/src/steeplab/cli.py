"""Command-line front end: simulate / sweep / analyze / limit-solve / check / scenario.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical
failure (partial artifacts are left in the output directory).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import reporting
from .analysis import sweep, threshold_diagnostics, volterra_residual
from .errors import ConfigError, NumericalError, ThresholdPlateauError
from .firing import check_assumption_A, parse_firing
from .heaviside import solve_heaviside_right_smooth
from .integrator import detect_crossings, integrate
from .model import Scenario, check_assumption_B, load_scenario, uniform_bound
from .scenarios import BUILTIN_SCENARIOS, builtin, limit_candidates


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="steeplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="verb")

    def add_common(p):
        p.add_argument("--out", default="steeplab-out", help="output directory")
        p.add_argument("--formats", default="csv,json",
                       help="comma list of data formats to write")
        p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
        p.add_argument("--seed", type=int, default=None,
                       help="recorded for future randomized scenarios; unused")

    sim = sub.add_parser("simulate", help="integrate a scenario at one steepness")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--beta", type=float, required=True)
    sim.add_argument("--t-end", type=float, default=None)
    sim.add_argument("--rel-tol", type=float, default=1e-9)
    sim.add_argument("--abs-tol", type=float, default=1e-9)
    sim.add_argument("--root-tol", type=float, default=None)
    add_common(sim)

    sw = sub.add_parser("sweep", help="integrate a list of steepness values")
    sw.add_argument("--scenario", required=True)
    sw.add_argument("--betas", required=True, help="comma-separated steepness list")
    sw.add_argument("--rel-tol", type=float, default=1e-9)
    sw.add_argument("--abs-tol", type=float, default=1e-9)
    sw.add_argument("--cluster-tol", type=float, default=1e-2)
    sw.add_argument("--grid-n", type=int, default=2048)
    add_common(sw)

    an = sub.add_parser("analyze", help="diagnostics and residual for a trajectory file")
    an.add_argument("--traj", required=True, help="trajectory CSV to re-ingest")
    an.add_argument("--scenario", required=True)
    an.add_argument("--beta", default="inf",
                    help="steepness for the residual check (number or 'inf')")
    an.add_argument("--u-theta", type=float, default=None)
    an.add_argument("--grid-n", type=int, default=10000)
    an.add_argument("--quad-n", type=int, default=10000)
    an.add_argument("--deltas", default="0.1,0.01,0.001")
    add_common(an)

    ls = sub.add_parser("limit-solve", help="right-smooth Heaviside-limit solution")
    ls.add_argument("--scenario", required=True)
    ls.add_argument("--s-infty-zero", type=float, default=None,
                    help="firing value at exactly zero (default: family's)")
    ls.add_argument("--mode", choices=("convention", "solve"), default="convention")
    ls.add_argument("--max-crossings", type=int, default=10000)
    add_common(ls)

    ck = sub.add_parser("check", help="assumption checks for families and sources")
    ck.add_argument("--firing", default=None, help="family code for the tail check")
    ck.add_argument("--eps", type=float, default=0.01)
    ck.add_argument("--delta", type=float, default=0.1)
    ck.add_argument("--scenario", default=None, help="source boundedness check")
    ck.add_argument("--betas", default="10,100,1000,10000")
    ck.add_argument("--t-grid-n", type=int, default=1001)

    sc = sub.add_parser("scenario", help="list built-ins or dump one as a config file")
    sc.add_argument("action", choices=("list", "show"))
    sc.add_argument("name", nargs="?", default=None)
    sc.add_argument("--out", default=None, help="write the config to this file")

    return parser


def _resolve_scenario(ref: str) -> Scenario:
    if ref in BUILTIN_SCENARIOS:
        return builtin(ref)
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    raise ConfigError(
        f"scenario {ref!r} is neither a built-in ({', '.join(BUILTIN_SCENARIOS)}) "
        "nor a config file"
    )


def _parse_beta(text: str) -> float:
    if str(text).strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _formats(args) -> set:
    return {f.strip() for f in args.formats.split(",") if f.strip()}


def _write_summary(out: Path, payload: dict) -> None:
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------
# verbs
# ----------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.t_end is not None:
        scenario = scenario.with_t_end(args.t_end)
    out = _out_dir(args)
    formats = _formats(args)
    root_tol = args.root_tol or 1e-12 * scenario.params.t_end

    traj = integrate(scenario, args.beta, args.rel_tol, args.abs_tol)
    files = []
    if "csv" in formats:
        files.append(reporting.write_trajectory_csv(out / "trajectory.csv", traj))
    plateau = None
    events = []
    try:
        events = detect_crossings(traj, scenario.params.u_theta, root_tol)
    except ThresholdPlateauError as exc:
        plateau = str(exc)
    if "json" in formats:
        files.append(reporting.write_crossings_json(out / "crossings.json", events))
    if not args.no_plot:
        references = dict(limit_candidates(scenario)) if scenario.params.n == 1 else {}
        files.append(reporting.plot_trajectory(
            out / "trajectory.png", traj, scenario.params.u_theta,
            references=references,
            title=f"{scenario.name or args.scenario} at beta={args.beta:g}",
        ))
    bound = uniform_bound(scenario, scenario.source.bound())
    peak = float(np.max(np.abs(traj.value(traj.grid(2048)))))
    _write_summary(out, {
        "command": "simulate", "scenario": args.scenario, "beta": args.beta,
        "rel_tol": args.rel_tol, "abs_tol": args.abs_tol, "root_tol": root_tol,
        "steps": int(traj.node_times.size - 1), "crossings": len(events),
        "plateau": plateau, "sup_norm": peak, "uniform_bound": bound,
        "seed": args.seed,
    })
    print(f"simulate {args.scenario} beta={args.beta:g}: "
          f"{traj.node_times.size - 1} steps, {len(events)} crossing(s)"
          + (", threshold plateau" if plateau else ""))
    print(f"  sup|u| = {peak:.6g} (bound {bound:.6g})")
    for f in files:
        print(f"  wrote {f}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    out = _out_dir(args)
    formats = _formats(args)
    betas = [float(b) for b in args.betas.split(",") if b.strip()]
    workers = max(1, int(os.environ.get("STEEPLAB_THREADS", "1")))

    report = sweep(scenario, betas, rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                   cluster_tol=args.cluster_tol, grid_n=args.grid_n,
                   max_workers=workers)
    files = []
    if "json" in formats:
        files.append(reporting.write_sweep_json(out / "sweep.json", report))
    if "csv" in formats:
        ok = sorted(report.trajectories)
        header = ["beta"] + [reporting.fmt_beta(b) for b in ok]
        rows = [[reporting.fmt_beta(a)] + [reporting.fmt(v) for v in row]
                for a, row in zip(ok, report.distance_matrix)]
        path = out / "distances.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
        files.append(path)
        for b in ok:
            files.append(reporting.write_trajectory_csv(
                out / f"trajectory_beta_{reporting.fmt_beta(b)}.csv",
                report.trajectories[b]))
    if not args.no_plot:
        files.append(reporting.plot_sweep(
            out / "sweep.png", report, scenario.params.u_theta,
            title=f"{scenario.name or args.scenario} sweep"))

    print(f"sweep {args.scenario}: {len(report.clusters)} cluster(s), "
          f"entire sequence converges: {report.entire_sequence_converges} "
          f"(margin {report.margin:.3g})")
    for c in report.clusters:
        match = c.match or "unidentified limit"
        print(f"  cluster betas={list(c.betas)} -> {match} "
              f"(diameter {c.diameter:.3g})")
    for b, msg in sorted(report.failures.items()):
        print(f"  beta={b:g} failed: {msg}")
    for w in report.warnings:
        print(f"  warning: {w}")
    for f in files:
        print(f"  wrote {f}")
    return 0 if not report.failures else 2


def _cmd_analyze(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    traj = reporting.load_trajectory_csv(args.traj)
    out = _out_dir(args)
    formats = _formats(args)
    u_theta = scenario.params.u_theta if args.u_theta is None else args.u_theta
    beta = _parse_beta(args.beta)
    deltas = tuple(float(d) for d in args.deltas.split(",") if d.strip())

    diag = threshold_diagnostics(traj, u_theta, grid_n=args.grid_n, deltas=deltas)
    residual = volterra_residual(traj, scenario, beta, quad_n=args.quad_n)

    files = []
    if "json" in formats:
        files.append(reporting.write_diagnostics_json(out / "diagnostics.json", diag))
    if "csv" in formats:
        files.append(reporting.write_curve_csv(
            out / "residual.csv", residual.curve, ["t", "residual"]))
        files.append(reporting.write_curve_csv(
            out / "r_curve.csv", list(diag.r_curve), ["delta", "measure"]))
    if not args.no_plot:
        files.append(reporting.plot_residual(
            out / "residual.png", residual.curve,
            title=f"residual vs beta={args.beta}"))
        files.append(reporting.plot_r_curve(
            out / "r_curve.png", list(diag.r_curve), title="threshold measure"))

    print(f"analyze {args.traj}: classification {diag.classification}, "
          f"crossings {diag.crossing_count}, Z = {diag.z_measure:.6g} "
          f"(resolution {diag.resolution:.3g})")
    print(f"  sup residual vs beta={args.beta}: {residual.sup_residual:.6g}")
    for w in diag.warnings:
        print(f"  warning: {w}")
    for f in files:
        print(f"  wrote {f}")
    return 0


def _cmd_limit_solve(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.s_infty_zero is not None:
        scenario = scenario.with_heaviside(args.s_infty_zero)
    elif scenario.firing.kind != "heaviside":
        scenario = scenario.with_heaviside(scenario.firing.heaviside_zero_value)
    out = _out_dir(args)
    formats = _formats(args)

    solution = solve_heaviside_right_smooth(
        scenario, mode=args.mode, max_crossings=args.max_crossings)
    traj = solution.trajectory
    files = []
    if "csv" in formats:
        files.append(reporting.write_trajectory_csv(out / "limit_trajectory.csv", traj))
        z_rows = np.column_stack([solution.boundary_times, solution.z_values])
        files.append(reporting.write_curve_csv(
            out / "limit_z_values.csv", z_rows,
            ["t"] + [f"z_{j + 1}" for j in range(traj.n)]))
    if "json" in formats:
        files.append(reporting.write_crossings_json(
            out / "limit_crossings.json", solution.crossings))
    if not args.no_plot:
        files.append(reporting.plot_trajectory(
            out / "limit_trajectory.png", traj, scenario.params.u_theta,
            title=f"{scenario.name or args.scenario} limit solution "
                  f"(zero value {scenario.firing.heaviside_zero_value:g})"))

    print(f"limit-solve {args.scenario}: {len(solution.crossings)} crossing(s), "
          f"zero value {scenario.firing.heaviside_zero_value:g}, mode {args.mode}")
    for f in files:
        print(f"  wrote {f}")
    return 0


def _cmd_check(args) -> int:
    if args.firing:
        family = parse_firing(args.firing)
        report = check_assumption_A(family, args.eps, args.delta)
        print(f"Q = {report.q}")
        print(f"pass = {report.passed}")
        if report.detail:
            print(f"  {report.detail}")
        return 0
    if args.scenario:
        scenario = _resolve_scenario(args.scenario)
        betas = [int(b) for b in args.betas.split(",") if b.strip()]
        t_grid = np.linspace(0.0, scenario.params.t_end, args.t_grid_n)
        report = check_assumption_B(scenario.source, betas, t_grid)
        print(f"B = {report.bound:.6g}")
        print(f"pointwise_dev = {report.pointwise_dev:.6g}")
        print(f"integral_dev = {report.integral_dev:.6g}")
        print(f"pass = {report.passed}")
        if report.detail:
            print(f"  {report.detail}")
        return 0
    raise ConfigError("check needs --firing or --scenario")


def _cmd_scenario(args) -> int:
    if args.action == "list":
        for name in BUILTIN_SCENARIOS:
            print(name)
        return 0
    if not args.name:
        raise ConfigError("scenario show needs a name")
    scenario = _resolve_scenario(args.name)
    text = json.dumps(scenario.to_config(), indent=2, sort_keys=True)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        print(f"wrote {path}")
    else:
        print(text)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "limit-solve": _cmd_limit_solve,
    "check": _cmd_check,
    "scenario": _cmd_scenario,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
