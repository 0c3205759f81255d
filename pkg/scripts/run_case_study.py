#!/usr/bin/env python3
"""Solve the reference mission (700 km polar orbit, no splash-down
constraint), then re-propagate and print the headline numbers.

Equivalent to `ascentopt --unconstrained solve`, kept as a script so the
library API usage is visible end to end.
"""

import argparse
import time

import numpy as np

from ascentopt import scvx, validate
from ascentopt.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--splash-lat", type=float, default=None,
                    help="optional splash-down latitude constraint [deg]")
    ap.add_argument("--max-iters", type=int, default=None)
    args = ap.parse_args()

    cfg = RunConfig()
    earth = cfg.build_earth()
    scales = cfg.build_scales(earth)
    vehicle = cfg.build_vehicle()
    plan = cfg.build_plan(vehicle, earth,
                          splash_latitude_deg=args.splash_lat)
    scvx_cfg = cfg.build_scvx_config(verbose=True)
    if args.max_iters:
        from dataclasses import replace
        scvx_cfg = replace(scvx_cfg, max_iters=args.max_iters)

    t0 = time.perf_counter()
    result = scvx.run(plan, vehicle, scvx_cfg, earth=earth, scales=scales,
                      guess_params=cfg.build_guess_params())
    wall = time.perf_counter() - t0

    sol = result.trajectory
    rep = validate.propagate_ascent(sol, plan, vehicle, earth, scales,
                                    samples_per_phase=256)
    ret = validate.simulate_return(sol, plan, vehicle, earth, scales)
    audit = validate.audit_constraints(sol, plan, vehicle, earth, scales,
                                       report=rep)

    payload = sol.final_mass * scales.mu_mass - vehicle.stages[-1].m_dry
    print()
    print(f"converged            : {result.converged} "
          f"({result.iterations} iterations, {wall:.1f} s)")
    print(f"payload              : {payload:.2f} kg")
    for i in (10, 11, 12, 13):
        if i in sol.sigmas:
            print(f"duration phase {i:2d}    : "
                  f"{float(sol.sigmas[i]) * scales.tu:.2f} s")
    print(f"splash-down latitude : {np.degrees(ret.splash_latitude):.2f} deg")
    print(f"semi-major axis error: {abs(rep.elements.a - plan.target.a_des):.1f} m")
    print(f"eccentricity         : {rep.elements.e:.2e}")
    print(f"inclination error    : "
          f"{abs(np.degrees(rep.elements.inc) - 90.0):.2e} deg")
    print(f"max heat flux        : {audit.max_heat_flux:.2f} W/m^2 "
          f"(nodes: {audit.node_heat_flux_max:.2f})")
    if audit.active_arcs:
        arcs = ", ".join(f"[{a:.1f}, {b:.1f}] s" for a, b in audit.active_arcs)
        print(f"flux-bound arcs      : {arcs}")
    return 0 if result.converged else 1


if __name__ == "__main__":
    raise SystemExit(main())
