"""Nonlinear re-propagation and constraint audit of a converged solution.

The optimized control is reconstructed from the discrete solution (thrust
direction interpolated over each segment's collocation nodes, magnitude from
the physical thrust-to-mass ratio) and the full equations of motion are
integrated phase by phase. The report compares the propagated trajectory
against the discrete nodes, the target orbit, and the path constraints.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import dynamics
from .collocation import mesh_for_phase
from .environment import EarthModel, ScaleSet, atmosphere, unscale_state
from .mission import GuidanceMode

_IVP_OPTS = dict(method="RK45", rtol=1e-10, atol=1e-12, dense_output=True)


@dataclass(frozen=True)
class OrbitalElements:
    a: float  # semi-major axis [m]
    e: float  # eccentricity
    inc: float  # inclination [rad]


def orbital_elements(r, v, mu):
    """Semi-major axis, eccentricity, inclination of an (r, v) state."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    a = 1.0 / (2.0 / rn - np.dot(v, v) / mu)
    e_vec = np.cross(v, h) / mu - r / rn
    inc = np.arccos(np.clip(h[2] / np.linalg.norm(h), -1.0, 1.0))
    return OrbitalElements(a=a, e=float(np.linalg.norm(e_vec)), inc=inc)


@dataclass
class PhaseTrace:
    index: int
    times: np.ndarray  # absolute time since liftoff [s]
    states: np.ndarray  # (n, 7) SI states
    heat_flux: np.ndarray  # free-stream heating at the samples [W/m^2]
    node_gap: float  # max scaled gap |x_prop - x_node| at the mesh nodes


@dataclass
class PropagationReport:
    traces: list
    final_state: np.ndarray  # SI state at payload release
    elements: OrbitalElements
    max_heat_flux: float  # over the samples of heat-flux-constrained phases
    max_node_gap: float  # scaled, over all phases
    phase_start_times: dict  # phase index -> absolute start time [s]

    def trace(self, index):
        for t in self.traces:
            if t.index == index:
                return t
        raise KeyError(f"no propagated trace for phase {index}")


@dataclass
class ReturnReport:
    splash_latitude: float  # [rad]
    flight_time: float  # from third-stage burnout to splash-down [s]
    times: np.ndarray  # absolute time since liftoff [s]
    states: np.ndarray  # (n, 7) SI states


@dataclass
class ConstraintAudit:
    max_relaxation_error: float  # scaled max | ||u|| - u_N | at collocation nodes
    max_heat_flux: float  # propagated [W/m^2]
    active_arcs: list  # (t_start, t_end) absolute intervals near the flux bound
    node_heat_flux_max: float  # heat flux evaluated at the discrete nodes


def _control_fn(phase, mesh, controls_scaled, duration, scales):
    """SI commanded acceleration: interpolated direction, physical magnitude."""
    u_cols = np.asarray(controls_scaled)

    def control(t, x):
        tau = min(max(t / duration, 0.0), 1.0)
        u = np.array([
            mesh.interpolate_control(u_cols[:, k], tau) for k in range(3)
        ])
        nu = np.linalg.norm(u)
        if nu == 0.0:
            raise ValueError("vanishing commanded acceleration")
        return u / nu

    return control


def _phase_rhs(phase, vehicle, earth, direction, t_ign0, scales):
    units = scales.state_units
    stage = vehicle.stages[phase.stage_index] if phase.guidance.powered else None

    def rhs(t, xs):
        x = unscale_state(xs, scales)
        t_ign = min(t_ign0 + t * scales.tu, stage.t_b) if stage else 0.0
        u = None
        if phase.guidance is GuidanceMode.OPTIMAL:
            alt = np.linalg.norm(x[0:3]) - earth.r_earth
            thrust = stage.vacuum_thrust(t_ign) - atmosphere(alt).pressure * stage.a_e
            u = thrust / x[6] * direction(t * scales.tu, x)
        f = dynamics.eom(x, u, phase, t_ign, vehicle, earth)
        return scales.tu * f / units

    return rhs


def propagate_ascent(trajectory, plan, vehicle, earth=EarthModel(), scales=None,
                     samples_per_phase=64):
    """Integrate the full dynamics under the reconstructed optimal control.

    `trajectory` provides scaled per-phase node states, collocation-node
    controls, and durations (a converged iterate or any reference-shaped
    object). The integration starts from the solved initial state and chains
    the phases with their mass drops.
    """
    scales = scales or ScaleSet.from_earth(earth)
    xs = np.asarray(trajectory.states[1][0], dtype=float)

    traces = []
    starts = {}
    t_abs = 0.0
    max_flux = 0.0
    max_gap = 0.0
    for phase in plan:
        if phase.guidance is GuidanceMode.RETURN:
            break
        i = phase.index
        starts[i] = t_abs
        xs = xs.copy()
        xs[6] -= phase.mass_drop_before / scales.mu_mass
        if i in trajectory.sigmas:
            sigma = float(trajectory.sigmas[i])
        elif phase.fixed:
            sigma = phase.duration / scales.tu
        else:
            raise KeyError(f"no duration for free phase {i}")
        duration_si = sigma * scales.tu
        mesh = mesh_for_phase(phase)
        t_ign0 = plan.burn_offset(phase, duration_si)

        direction = None
        if phase.guidance is GuidanceMode.OPTIMAL:
            direction = _control_fn(
                phase, mesh, trajectory.controls[i], duration_si, scales)
        rhs = _phase_rhs(phase, vehicle, earth, direction, t_ign0, scales)
        sol = solve_ivp(rhs, (0.0, sigma), xs, **_IVP_OPTS)
        if not sol.success:
            raise RuntimeError(f"propagation failed in phase {i}: {sol.message}")

        # gap against the discrete nodes, in scaled units
        node_states = np.asarray(trajectory.states[i])
        node_t = mesh.state_taus() * sigma
        gap = float(np.max(np.abs(sol.sol(node_t).T - node_states)))
        max_gap = max(max_gap, gap)

        t_samp = np.linspace(0.0, sigma, samples_per_phase)
        x_samp = sol.sol(t_samp).T
        x_si = np.array([unscale_state(x, scales) for x in x_samp])
        flux = np.array([dynamics.heat_flux(x, earth).qdot for x in x_si])
        if phase.heat_flux_constrained:
            max_flux = max(max_flux, float(np.max(flux)))
        traces.append(PhaseTrace(
            index=i,
            times=t_abs + t_samp * scales.tu,
            states=x_si,
            heat_flux=flux,
            node_gap=gap,
        ))
        xs = sol.y[:, -1]
        t_abs += duration_si

    final_si = unscale_state(xs, scales)
    elements = orbital_elements(final_si[0:3], final_si[3:6], earth.mu)
    return PropagationReport(
        traces=traces,
        final_state=final_si,
        elements=elements,
        max_heat_flux=max_flux,
        max_node_gap=max_gap,
        phase_start_times=starts,
    )


def simulate_return(trajectory, plan, vehicle, earth=EarthModel(), scales=None,
                    t_max_factor=40.0, samples=256):
    """Ballistic drop of the spent third stage from its burnout state.

    Starts from the end of the last third-stage burn with the stage dry mass
    and integrates drag-perturbed motion until the radius crosses the Earth
    radius. Returns the splash-down latitude and the descent trace.
    """
    scales = scales or ScaleSet.from_earth(earth)
    x0 = unscale_state(np.asarray(trajectory.states[8][-1]), scales)
    x0 = x0.copy()
    x0[6] = vehicle.stages[2].m_dry
    return_phase = plan.phases[-1]
    if return_phase.guidance is not GuidanceMode.RETURN:
        # unconstrained plans carry no return phase; synthesize an
        # equivalent coast-with-drag arc for the descent dynamics
        from dataclasses import replace
        return_phase = replace(
            plan.phases[-1], index=13, guidance=GuidanceMode.RETURN,
            stage_index=None, fixed=False, mass_drop_before=0.0,
            burn_clock_offset=0.0)

    def rhs(t, x):
        return dynamics.eom(x, None, return_phase, 0.0, vehicle, earth)

    def impact(t, x):
        return np.linalg.norm(x[0:3]) - earth.r_earth

    impact.terminal = True
    impact.direction = -1.0
    t_max = t_max_factor * 600.0
    sol = solve_ivp(rhs, (0.0, t_max), x0, events=impact,
                    method="RK45", rtol=1e-10, atol=1e-6, dense_output=True)
    if not sol.t_events[0].size:
        raise RuntimeError("spent stage never descends to the Earth radius")
    t_splash = float(sol.t_events[0][0])
    x_splash = sol.sol(t_splash)
    lat = float(np.arcsin(np.clip(
        x_splash[2] / np.linalg.norm(x_splash[0:3]), -1.0, 1.0)))

    # absolute time base: burnout of the last third-stage arc
    t0 = 0.0
    for phase in plan:
        if phase.index > 8:
            break
        if phase.index in trajectory.sigmas:
            t0 += float(trajectory.sigmas[phase.index]) * scales.tu
        else:
            t0 += phase.duration
    t_samp = np.linspace(0.0, t_splash, samples)
    return ReturnReport(
        splash_latitude=lat,
        flight_time=t_splash,
        times=t0 + t_samp,
        states=sol.sol(t_samp).T,
    )


def audit_constraints(solution, plan, vehicle, earth=EarthModel(), scales=None,
                      heat_flux_max=900.0, report=None, arc_tol=1e-3):
    """Check the cone relaxation and the heat-flux bound on a solution.

    The relaxation error is max | ||u|| - u_N | over the collocation nodes of
    free-direction phases. Heat flux is evaluated both at the discrete nodes
    and along the propagated trajectory (`report`, computed on demand);
    active arcs are the propagated time intervals within `arc_tol`
    (relative) of the bound.
    """
    scales = scales or ScaleSet.from_earth(earth)
    relax = 0.0
    for i, u in solution.controls.items():
        norms = np.linalg.norm(np.asarray(u), axis=1)
        relax = max(relax, float(np.max(np.abs(norms - solution.u_norms[i]))))

    node_flux = 0.0
    for phase in plan:
        if not phase.heat_flux_constrained:
            continue
        for xs in solution.states[phase.index]:
            node_flux = max(
                node_flux,
                dynamics.heat_flux(unscale_state(xs, scales), earth).qdot,
            )

    if report is None:
        report = propagate_ascent(solution, plan, vehicle, earth, scales)
    arcs = []
    for trace in report.traces:
        if not plan.phase(trace.index).heat_flux_constrained:
            continue
        hot = trace.heat_flux >= heat_flux_max * (1.0 - arc_tol)
        if not np.any(hot):
            continue
        edges = np.flatnonzero(np.diff(hot.astype(int)))
        bounds = np.concatenate([[0], edges + 1, [len(hot)]])
        for a, b in zip(bounds[:-1], bounds[1:]):
            if hot[a]:
                arcs.append((float(trace.times[a]), float(trace.times[b - 1])))

    return ConstraintAudit(
        max_relaxation_error=relax,
        max_heat_flux=report.max_heat_flux,
        active_arcs=arcs,
        node_heat_flux_max=node_flux,
    )
