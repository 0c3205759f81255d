#!/usr/bin/env python3
"""Sweep the splash-down latitude constraint and tabulate the payload cost.

Solves the unconstrained problem once to locate the natural splash-down
latitude, then walks the requested latitudes outward from it in both
directions, warm-starting each point from its converged neighbor.
Equivalent to `ascentopt sweep`; writes sweep.csv under --out-dir.
"""

import argparse
import csv
from pathlib import Path

from ascentopt.cli import _G, run_sweep
from ascentopt.config import RunConfig, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None, help="YAML run configuration")
    ap.add_argument("--out-dir", default="out_sweep")
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else RunConfig()
    rows, ok, phi_star = run_sweep(cfg, quiet=False)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
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

    print(f"\nnatural splash-down latitude: {phi_star:.2f} deg")
    print(f"{'lat [deg]':>10} {'payload [kg]':>13} {'iters':>6} {'flux':>8}")
    for row in rows:
        print(f"{row['latitude_deg']:10.1f} {row['payload_kg']:13.2f} "
              f"{row['iterations']:6d} {row['max_heat_flux_w_m2']:8.2f}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
