"""End-to-end acceptance criteria for the reference mission.

Each test prints one PASS/FAIL line (written straight to the terminal so it
is visible regardless of capture) and then asserts. The suite solves the
unconstrained problem cold once and runs the full splash-latitude sweep
once; expect roughly ten minutes of wall time.
"""

import sys
import time
from types import SimpleNamespace

import numpy as np
import pytest

from ascentopt import scvx, validate
from ascentopt.cli import run_sweep
from ascentopt.config import RunConfig

pytestmark = pytest.mark.acceptance

# reference values for the 700 km polar mission
PAYLOAD_REF = 1400.73  # [kg]
DT_REF = {10: 359.71, 11: 2583.50, 12: 142.39}  # [s]
SPLASH_REF = 65.79  # unconstrained splash-down latitude [deg]
FLUX_BOUND = 900.0 * (1.0 + 1e-3)  # propagated heat-flux tolerance [W/m^2]
ARC_REF = (576.6, 604.2)  # active flux arc at 55 deg [s]

CFG = RunConfig()

# one verdict line per criterion; echoed by conftest.py after the run
REPORT_LINES = []


def _criterion(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    REPORT_LINES.append(line)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    assert ok, line


@pytest.fixture(scope="module")
def cold():
    earth = CFG.build_earth()
    scales = CFG.build_scales(earth)
    vehicle = CFG.build_vehicle()
    plan = CFG.build_plan(vehicle, earth, splash_latitude_deg=None)
    t0 = time.perf_counter()
    result = scvx.run(plan, vehicle, CFG.build_scvx_config(), earth=earth,
                      scales=scales, guess_params=CFG.build_guess_params())
    wall = time.perf_counter() - t0
    sol = result.trajectory
    rep = validate.propagate_ascent(sol, plan, vehicle, earth, scales,
                                    samples_per_phase=256)
    ret = validate.simulate_return(sol, plan, vehicle, earth, scales)
    audit = validate.audit_constraints(sol, plan, vehicle, earth, scales,
                                       report=rep)
    payload = sol.final_mass * scales.mu_mass - vehicle.stages[-1].m_dry
    dts = {i: float(sol.sigmas[i]) * scales.tu for i in (10, 11, 12)}
    return SimpleNamespace(result=result, wall=wall, payload=payload,
                           dts=dts, report=rep, ret=ret, audit=audit,
                           plan=plan, earth=earth)


@pytest.fixture(scope="module")
def sweep():
    rows, ok, phi_star = run_sweep(CFG, quiet=True)
    return SimpleNamespace(rows={r["latitude_deg"]: r for r in rows},
                           all_converged=ok, phi_star=phi_star)


def test_criterion_1_cold_convergence(cold):
    pay_err = abs(cold.payload - PAYLOAD_REF) / PAYLOAD_REF
    dt_errs = {i: abs(cold.dts[i] - DT_REF[i]) / DT_REF[i] for i in DT_REF}
    ok = (cold.result.converged and cold.result.iterations <= 40
          and cold.wall <= 600.0 and pay_err <= 0.02
          and all(e <= 0.05 for e in dt_errs.values()))
    _criterion(
        "criterion 1 (cold run)",
        ok,
        f"converged={cold.result.converged} in {cold.result.iterations} "
        f"iterations, {cold.wall:.0f} s; payload {cold.payload:.2f} kg "
        f"({100 * pay_err:.2f}% off {PAYLOAD_REF}); durations "
        + ", ".join(f"dt{i}={cold.dts[i]:.1f}s ({100 * dt_errs[i]:.1f}%)"
                    for i in (10, 11, 12)))


def test_criterion_2_cone_relaxation(cold):
    err = cold.audit.max_relaxation_error
    _criterion("criterion 2 (lossless relaxation)", err <= 1e-6,
               f"max | ||u|| - u_N | = {err:.2e} scaled (bound 1e-6)")


def test_criterion_3_orbit_insertion(cold):
    a_des = cold.plan.target.a_des
    sma_rel = abs(cold.report.elements.a - a_des) / a_des
    ecc = cold.report.elements.e
    inc_err = abs(np.degrees(cold.report.elements.inc) - 90.0)
    ok = sma_rel <= 0.01 and ecc <= 1e-3 and inc_err <= 0.05
    _criterion(
        "criterion 3 (orbit insertion)", ok,
        f"SMA error {abs(cold.report.elements.a - a_des):.1f} m "
        f"({100 * sma_rel:.2e}%), e={ecc:.2e}, "
        f"inclination error {inc_err:.2e} deg")


def test_criterion_4_natural_splash_latitude(cold):
    lat = np.degrees(cold.ret.splash_latitude)
    err = abs(lat - SPLASH_REF)
    _criterion("criterion 4 (natural splash latitude)", err <= 1.0,
               f"{lat:.2f} deg vs reference {SPLASH_REF} (error {err:.2f} "
               f"deg; payload is flat to ~0.2 kg over several degrees here, "
               f"making this latitude ill-conditioned)")


def test_criterion_5_sweep(cold, sweep):
    rows = sweep.rows
    iters = {lat: r["iterations"] for lat, r in rows.items()}
    plateau = [rows[lat]["payload_kg"] for lat in (60, 63, 66, 69, 72)]
    spread = max(plateau) - min(plateau)
    best = max(r["payload_kg"] for r in rows.values())
    loss_hi = best - rows[80]["payload_kg"]
    loss_lo = (best - rows[55]["payload_kg"]) / best
    ok = (sweep.all_converged and max(iters.values()) <= 15
          and spread <= 1.5 and loss_hi <= 4.0 and loss_lo <= 0.015)
    _criterion(
        "criterion 5 (splash-latitude sweep)", ok,
        f"all converged={sweep.all_converged}, max iterations "
        f"{max(iters.values())} (<=15); plateau spread {spread:.2f} kg "
        f"(<=1.5); loss {loss_hi:.2f} kg at 80 deg (<=4); "
        f"loss {100 * loss_lo:.2f}% at 55 deg (<=1.5%)")


def _parse_arcs(text):
    arcs = []
    for part in text.split(";"):
        if part:
            a, b = part.split("..")
            arcs.append((float(a), float(b)))
    return arcs


def test_criterion_6_heat_flux(cold, sweep):
    fluxes = {"unconstrained": cold.audit.max_heat_flux}
    for lat, r in sweep.rows.items():
        if r["converged"]:
            fluxes[lat] = r["max_heat_flux_w_m2"]
    worst = max(fluxes, key=lambda k: fluxes[k])
    flux_ok = fluxes[worst] <= FLUX_BOUND

    arcs = [(a, b) for a, b in _parse_arcs(sweep.rows[55]["heat_flux_arcs"])
            if b - a > 1.0]
    arc_ok = any(abs(a - ARC_REF[0]) <= 15.0 and abs(b - ARC_REF[1]) <= 15.0
                 for a, b in arcs)
    _criterion(
        "criterion 6 (heat flux)", flux_ok and arc_ok,
        f"max propagated flux {fluxes[worst]:.2f} W/m^2 at {worst} "
        f"(bound {FLUX_BOUND:.1f}); 55 deg active arcs "
        f"{[(round(a, 1), round(b, 1)) for a, b in arcs]} vs "
        f"[{ARC_REF[0]}, {ARC_REF[1]}] +-15 s")


def test_criterion_7_discretization_fidelity(cold):
    # the randomized property suites for Jacobians, collocation exactness,
    # the conic-solver corpus, and atmosphere gradients run as the unit
    # tests; this checks the end-to-end half: the converged solution's
    # collocated states match the nonlinear propagation at every node
    gap = cold.report.max_node_gap
    _criterion("criterion 7 (collocation vs propagation)", gap <= 1e-3,
               f"max scaled node gap {gap:.2e} (bound 1e-3)")


def test_criterion_8_penalty_hygiene(cold):
    sol = cold.result.trajectory
    final_ok = sol.q_l1 <= 1e-8 and sol.w_l1 <= 1e-8
    early_w = [r.w_l1 for r in cold.result.history[:10]]
    early_ok = any(w > 1e-6 for w in early_w)
    _criterion(
        "criterion 8 (penalty hygiene)", final_ok and early_ok,
        f"at convergence q_l1={sol.q_l1:.2e}, w_l1={sol.w_l1:.2e} "
        f"(<=1e-8: {final_ok}); max early w_l1={max(early_w):.2e} "
        f"(>1e-6 in first 10 iterations: {early_ok}; the buffered "
        f"subproblems are strictly feasible from the integrated seed, so "
        f"the buffers stay at solver precision throughout)")
