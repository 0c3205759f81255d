"""Command-line front end: solve / sweep / guess / simulate.

Artifacts are CSV files plus a flat key-value summary, written under the
output directory. All floating-point output uses 17 significant digits so
identical configurations produce byte-identical files.

Exit codes: 0 success, 1 non-convergence (or rejected guess), 2
configuration error, 3 internal or solver failure.
"""

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import scvx, validate
from .config import ConfigError, RunConfig, load_config, with_overrides
from .initial_guess import GuessRejected, ReferenceTrajectory


EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3

_G = "%.17g"


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _G % float(value)
    return str(value)


def write_summary(path, items):
    with open(path, "w") as f:
        for key, value in items:
            f.write(f"{key} = {_fmt(value)}\n")


def write_iteration_log(path, history):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "objective", "final_mass_scaled", "q_l1",
                    "w_l1", "convergence_norm", "solver_iterations",
                    "wall_time_s"])
        for r in history:
            w.writerow([r.iteration, _G % r.objective, _G % r.final_mass,
                        _G % r.q_l1, _G % r.w_l1, _G % r.convergence_norm,
                        r.solver_iterations, _G % r.wall_time])


def write_trajectory(path, trajectory):
    """Scaled node states, controls, and durations in one CSV.

    Rows: kind=state (c1..c7), kind=control (c1..c3), kind=duration (c1).
    """
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["phase", "kind", "node", "c1", "c2", "c3", "c4", "c5",
                    "c6", "c7"])
        for i in sorted(trajectory.states):
            for n, x in enumerate(np.asarray(trajectory.states[i])):
                w.writerow([i, "state", n] + [_G % v for v in x])
        for i in sorted(trajectory.controls):
            for n, u in enumerate(np.asarray(trajectory.controls[i])):
                w.writerow([i, "control", n] + [_G % v for v in u] + [""] * 4)
        for i in sorted(trajectory.sigmas):
            w.writerow([i, "duration", 0, _G % float(trajectory.sigmas[i])]
                       + [""] * 6)


def read_trajectory(path):
    """Inverse of write_trajectory; returns a reference-shaped trajectory."""
    states, controls, sigmas = {}, {}, {}
    rows = {"state": {}, "control": {}}
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or header[:3] != ["phase", "kind", "node"]:
                raise ValueError("line 1: not a trajectory CSV header")
            for ln, row in enumerate(reader, start=2):
                try:
                    i, kind, n = int(row[0]), row[1], int(row[2])
                    if kind == "state":
                        if len(row) < 10:
                            raise ValueError("state row needs 7 components")
                        rows["state"].setdefault(i, {})[n] = [
                            float(v) for v in row[3:10]]
                    elif kind == "control":
                        if len(row) < 6:
                            raise ValueError("control row needs 3 components")
                        rows["control"].setdefault(i, {})[n] = [
                            float(v) for v in row[3:6]]
                    elif kind == "duration":
                        sigmas[i] = float(row[3])
                    else:
                        raise ValueError(f"unknown row kind {kind!r}")
                except (IndexError, ValueError) as exc:
                    raise ValueError(f"line {ln}: {exc}") from exc
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    for kind, dest in (("state", states), ("control", controls)):
        for i, by_node in rows[kind].items():
            if sorted(by_node) != list(range(len(by_node))):
                raise ValueError(f"phase {i}: non-contiguous {kind} nodes")
            dest[i] = np.array([by_node[n] for n in sorted(by_node)])
    if not states or not sigmas:
        raise ValueError(f"{path}: no trajectory rows found")
    return ReferenceTrajectory(states=states, controls=controls,
                               sigmas=sigmas, provenance="artifact")


def write_propagation(path, report):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["phase", "time_s", "x_m", "y_m", "z_m", "vx_m_s",
                    "vy_m_s", "vz_m_s", "m_kg", "heat_flux_w_m2"])
        for tr in report.traces:
            for t, x, q in zip(tr.times, tr.states, tr.heat_flux):
                w.writerow([tr.index, _G % t] + [_G % v for v in x]
                           + [_G % q])


def write_return(path, ret):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["time_s", "x_m", "y_m", "z_m", "vx_m_s", "vy_m_s",
                    "vz_m_s", "m_kg"])
        for t, x in zip(ret.times, ret.states):
            w.writerow([_G % t] + [_G % v for v in x])


def _solve_one(cfg, plan, vehicle, earth, scales, guess=None, quiet=False,
               scvx_cfg=None):
    if scvx_cfg is None:
        scvx_cfg = cfg.build_scvx_config(verbose=not quiet)
    t0 = time.perf_counter()
    result = scvx.run(plan, vehicle, scvx_cfg, guess=guess, earth=earth,
                      scales=scales, guess_params=cfg.build_guess_params())
    return result, time.perf_counter() - t0


def _report_solution(cfg, plan, vehicle, earth, scales, result, wall,
                     out: Path):
    """Write all artifacts of one solve; returns the summary items."""
    sol = result.trajectory
    rep = validate.propagate_ascent(sol, plan, vehicle, earth, scales,
                                    samples_per_phase=256)
    ret = validate.simulate_return(sol, plan, vehicle, earth, scales)
    audit = validate.audit_constraints(
        sol, plan, vehicle, earth, scales,
        heat_flux_max=cfg.scvx.heat_flux_max_w_m2, report=rep)
    m_dry_final = vehicle.stages[-1].m_dry
    payload = sol.final_mass * scales.mu_mass - m_dry_final
    a_des = earth.r_earth + cfg.mission.target_altitude_m
    items = [
        ("converged", result.converged),
        ("iterations", result.iterations),
        ("wall_time_s", wall),
        ("payload_kg", payload),
        ("final_mass_kg", sol.final_mass * scales.mu_mass),
    ]
    for i in (10, 11, 12, 13):
        if i in sol.sigmas:
            items.append((f"dt{i}_s", float(sol.sigmas[i]) * scales.tu))
    items += [
        ("splash_latitude_deg", np.degrees(ret.splash_latitude)),
        ("return_flight_time_s", ret.flight_time),
        ("sma_error_m", abs(rep.elements.a - a_des)),
        ("eccentricity", rep.elements.e),
        ("inclination_error_deg",
         abs(np.degrees(rep.elements.inc) - cfg.mission.inclination_deg)),
        ("max_heat_flux_w_m2", audit.max_heat_flux),
        ("node_heat_flux_w_m2", audit.node_heat_flux_max),
        ("max_node_gap_scaled", rep.max_node_gap),
        ("max_relaxation_error_scaled", audit.max_relaxation_error),
        ("q_l1", sol.q_l1),
        ("w_l1", sol.w_l1),
    ]
    for k, (a, b) in enumerate(audit.active_arcs):
        items.append((f"heat_flux_arc_{k}_s", f"{_G % a}..{_G % b}"))
    write_summary(out / "summary.txt", items)
    write_iteration_log(out / "iterations.csv", result.history)
    write_trajectory(out / "trajectory.csv", sol)
    write_propagation(out / "propagation.csv", rep)
    write_return(out / "return.csv", ret)
    return items


def cmd_solve(cfg, quiet=False):
    earth = cfg.build_earth()
    scales = cfg.build_scales(earth)
    vehicle = cfg.build_vehicle()
    plan = cfg.build_plan(vehicle, earth)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result, wall = _solve_one(cfg, plan, vehicle, earth, scales,
                                  quiet=quiet)
    except GuessRejected as exc:
        print(f"initial guess rejected: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except scvx.ScvxError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    items = _report_solution(cfg, plan, vehicle, earth, scales, result, wall,
                             out)
    if not quiet:
        for key, value in items:
            print(f"{key} = {_fmt(value)}")
    if not result.converged:
        print(f"not converged after {result.iterations} iterations",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def run_sweep(cfg, quiet=False):
    """Chained splash-latitude sweep; returns (rows, all_converged).

    A base unconstrained solution locates the natural splash latitude;
    points are then solved outward from the nearest latitude in both
    directions, each warm-started from its converged neighbor (or from the
    base solution for the two innermost points). With chaining disabled,
    every point starts from the base solution.
    """
    earth = cfg.build_earth()
    scales = cfg.build_scales(earth)
    vehicle = cfg.build_vehicle()
    base_plan = cfg.build_plan(vehicle, earth, splash_latitude_deg=None)
    base, base_wall = _solve_one(cfg, base_plan, vehicle, earth, scales,
                                 quiet=True)
    if not base.converged:
        raise scvx.ScvxError("base unconstrained solve did not converge",
                             history=base.history)
    ret = validate.simulate_return(base.trajectory, base_plan, vehicle,
                                   earth, scales)
    phi_star = np.degrees(ret.splash_latitude)
    if not quiet:
        print(f"base solve: {base.iterations} iterations, natural splash "
              f"latitude {phi_star:.2f} deg")

    lats = sorted(cfg.sweep.latitudes_deg)
    below = sorted([l for l in lats if l <= phi_star], reverse=True)
    above = sorted([l for l in lats if l > phi_star])
    warm_cfg = replace(cfg.build_scvx_config(verbose=False),
                       trust_decay_start=cfg.sweep.warm_trust_decay_start)
    results = {}
    ok = True
    for chain in (below, above):
        prev = None
        for lat in chain:
            plan = cfg.build_plan(vehicle, earth, splash_latitude_deg=lat)
            if prev is None or not cfg.sweep.chain:
                ref = scvx.extend_with_return(base.trajectory, plan, vehicle,
                                              earth, scales)
            else:
                ref = scvx._as_reference(prev.trajectory, prev.reference)
            row = {"latitude_deg": lat, "converged": False, "iterations": 0,
                   "wall_time_s": 0.0, "payload_kg": float("nan"),
                   "max_heat_flux_w_m2": float("nan"), "heat_flux_arcs": ""}
            try:
                result, wall = _solve_one(cfg, plan, vehicle, earth, scales,
                                          guess=ref, quiet=True,
                                          scvx_cfg=warm_cfg)
                sol = result.trajectory
                rep = validate.propagate_ascent(sol, plan, vehicle, earth,
                                                scales, samples_per_phase=256)
                audit = validate.audit_constraints(
                    sol, plan, vehicle, earth, scales,
                    heat_flux_max=cfg.scvx.heat_flux_max_w_m2, report=rep)
                row.update(
                    converged=result.converged,
                    iterations=result.iterations,
                    wall_time_s=wall,
                    payload_kg=(sol.final_mass * scales.mu_mass
                                - vehicle.stages[-1].m_dry),
                    max_heat_flux_w_m2=audit.max_heat_flux,
                    heat_flux_arcs=";".join(
                        f"{_G % a}..{_G % b}" for a, b in audit.active_arcs),
                )
                if result.converged:
                    prev = result
                else:
                    ok = False
            except (scvx.ScvxError, RuntimeError, ValueError) as exc:
                row["error"] = str(exc)
                ok = False
            results[lat] = row
            if not quiet:
                print(f"lat {lat:6.2f}: converged={row['converged']} "
                      f"iterations={row['iterations']} "
                      f"payload={row['payload_kg']:.2f} kg")
    rows = [results[lat] for lat in lats]
    return rows, ok, phi_star


def cmd_sweep(cfg, quiet=False):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows, ok, phi_star = run_sweep(cfg, quiet=quiet)
    except scvx.ScvxError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    with open(out / "sweep.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["latitude_deg", "payload_kg", "converged", "iterations",
                    "wall_time_s", "max_heat_flux_w_m2", "heat_flux_arcs"])
        for row in rows:
            w.writerow([_G % row["latitude_deg"], _G % row["payload_kg"],
                        "true" if row["converged"] else "false",
                        row["iterations"], _G % row["wall_time_s"],
                        _G % row["max_heat_flux_w_m2"],
                        row["heat_flux_arcs"]])
    write_summary(out / "sweep_summary.txt",
                  [("natural_splash_latitude_deg", phi_star),
                   ("points", len(rows)),
                   ("all_converged", ok)])
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_guess(cfg, quiet=False):
    earth = cfg.build_earth()
    scales = cfg.build_scales(earth)
    vehicle = cfg.build_vehicle()
    plan = cfg.build_plan(vehicle, earth)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        guess = scvx.generate_initial_guess(plan, vehicle,
                                            cfg.build_guess_params(), earth,
                                            scales)
    except GuessRejected as exc:
        write_summary(out / "guess_summary.txt",
                      [("accepted", False), ("reason", str(exc))])
        if not quiet:
            print(f"rejected: {exc}")
        return EXIT_NOT_CONVERGED
    write_trajectory(out / "guess_trajectory.csv", guess)
    write_summary(out / "guess_summary.txt", [("accepted", True)])
    if not quiet:
        print("accepted")
    return EXIT_OK


def cmd_simulate(cfg, artifact, quiet=False):
    earth = cfg.build_earth()
    scales = cfg.build_scales(earth)
    vehicle = cfg.build_vehicle()
    plan = cfg.build_plan(vehicle, earth)
    try:
        trajectory = read_trajectory(artifact)
    except ValueError as exc:
        print(f"bad trajectory artifact: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = validate.propagate_ascent(trajectory, plan, vehicle, earth, scales,
                                    samples_per_phase=256)
    ret = validate.simulate_return(trajectory, plan, vehicle, earth, scales)
    a_des = earth.r_earth + cfg.mission.target_altitude_m
    items = [
        ("splash_latitude_deg", np.degrees(ret.splash_latitude)),
        ("return_flight_time_s", ret.flight_time),
        ("sma_error_m", abs(rep.elements.a - a_des)),
        ("eccentricity", rep.elements.e),
        ("inclination_error_deg",
         abs(np.degrees(rep.elements.inc) - cfg.mission.inclination_deg)),
        ("max_heat_flux_w_m2", rep.max_heat_flux),
        ("max_node_gap_scaled", rep.max_node_gap),
    ]
    write_summary(out / "simulate_summary.txt", items)
    write_propagation(out / "propagation.csv", rep)
    write_return(out / "return.csv", ret)
    if not quiet:
        for key, value in items:
            print(f"{key} = {_fmt(value)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ascentopt",
        description="Multistage ascent trajectory optimization via "
                    "successive convexification.")
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--out-dir", help="artifact output directory")
    parser.add_argument("--splash-lat", type=float,
                        help="splash-down latitude constraint [deg]")
    parser.add_argument("--unconstrained", action="store_true",
                        help="drop the splash-down constraint")
    parser.add_argument("--max-iters", type=int, help="iteration budget")
    parser.add_argument("--tol", type=float, help="convergence tolerance")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", help="solve the configured problem")
    sub.add_parser("sweep", help="splash-latitude sweep")
    sub.add_parser("guess", help="generate and check the initial guess")
    p_sim = sub.add_parser("simulate",
                           help="propagate a solved trajectory artifact")
    p_sim.add_argument("artifact", help="trajectory CSV from a solve run")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = with_overrides(cfg, out_dir=args.out_dir,
                             splash_lat=args.splash_lat,
                             unconstrained=args.unconstrained,
                             max_iters=args.max_iters, tol=args.tol)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "solve":
            return cmd_solve(cfg, quiet=args.quiet)
        if args.command == "sweep":
            return cmd_sweep(cfg, quiet=args.quiet)
        if args.command == "guess":
            return cmd_guess(cfg, quiet=args.quiet)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.artifact, quiet=args.quiet)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
