"""Forward-propagated tentative trajectory that seeds the convex iteration.

The ascent guess integrates the vacuum equations of motion (atmosphere
removed) under simple prescribed steering laws: radial thrust at liftoff, a
linear pitch-over to a kick angle, gravity-turn arcs, and in-plane horizontal
thrust for the upper stages. The return arc, when present, is seeded by a
ballistic drop with drag from the third-stage burnout state.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import dynamics
from .collocation import mesh_for_phase
from .environment import EarthModel, ScaleSet, gravity_accel, scale_state
from .mission import GuidanceMode, initial_state, pitch_over_azimuth

_IVP_OPTS = dict(method="RK45", rtol=1e-10, atol=1e-9, dense_output=True)


class GuessRejected(ValueError):
    """Raised when the tentative trajectory dips below sea level."""


@dataclass(frozen=True)
class GuessParams:
    """Knobs of the tentative-trajectory generator."""

    m_payload: float = 100.0  # [kg]
    kick_angle: float = np.radians(80.0)  # pitch-over final elevation [rad]
    dt11: float = 2500.0  # coast before the final burn [s]
    dt12: float = 200.0  # final fourth-stage firing [s]

    def __post_init__(self):
        if self.m_payload < 0:
            raise ValueError("payload mass must be nonnegative")
        if not 0.0 < self.kick_angle < np.pi / 2:
            raise ValueError("kick angle must lie in (0, 90) degrees")
        if min(self.dt11, self.dt12) <= 0:
            raise ValueError("free-phase durations must be positive")


@dataclass
class ReferenceTrajectory:
    """Discrete reference for one linearization pass, in scaled units.

    states[i] is the (N_i, 7) node-state array of phase i; controls[i] holds
    the (M_i, 3) commanded accelerations at the collocation nodes of phases
    with free thrust direction; sigmas[i] is the phase duration.
    """

    states: dict
    controls: dict
    sigmas: dict
    provenance: str = "initial_guess"

    def copy(self):
        return ReferenceTrajectory(
            states={k: v.copy() for k, v in self.states.items()},
            controls={k: v.copy() for k, v in self.controls.items()},
            sigmas=dict(self.sigmas),
            provenance=self.provenance,
        )


def _local_frame(r):
    rhat = r / np.linalg.norm(r)
    east = np.cross([0.0, 0.0, 1.0], rhat)
    east = east / np.linalg.norm(east)
    north = np.cross(rhat, east)
    return rhat, north, east


def _pitch_over_direction(r, elevation, azimuth):
    rhat, north, east = _local_frame(r)
    horiz = np.cos(azimuth) * north + np.sin(azimuth) * east
    return np.sin(elevation) * rhat + np.cos(elevation) * horiz


def _in_plane_direction(r, h_hat):
    t = np.cross(h_hat, r / np.linalg.norm(r))
    return t / np.linalg.norm(t)


def _vacuum_rhs(phase, vehicle, earth, direction_fn, burn_offset):
    stage = vehicle.stages[phase.stage_index] if phase.guidance.powered else None

    def rhs(t, x):
        r, v, m = x[0:3], x[3:6], x[6]
        acc = gravity_accel(r, earth)
        mdot = 0.0
        if stage is not None:
            t_ign = min(burn_offset + t, stage.t_b)
            thrust = stage.vacuum_thrust(t_ign)
            mdot = stage.mass_flow(t_ign)
            acc = acc + thrust / m * direction_fn(t, x)
        return np.concatenate([v, acc, [-mdot]])

    return rhs


def _direction_fn(phase, plan, x0, duration, kick_angle, h_hat):
    mode = phase.guidance
    if mode is GuidanceMode.VERTICAL:
        return lambda t, x: x[0:3] / np.linalg.norm(x[0:3])
    if mode is GuidanceMode.ZLGT:
        def along_v_rel(t, x):
            vr = dynamics.relative_velocity(x)
            return vr / np.linalg.norm(vr)
        return along_v_rel
    if phase.index == 2:
        azimuth = pitch_over_azimuth(plan.target.i_des, plan.launch_site.latitude)
        def pitch_over(t, x):
            elev = np.pi / 2 + (kick_angle - np.pi / 2) * t / duration
            return _pitch_over_direction(x[0:3], elev, azimuth)
        return pitch_over
    return lambda t, x: _in_plane_direction(x[0:3], h_hat)


def _ballistic_return(x0, plan, vehicle, earth, t_max):
    """Drop with drag from the third-stage burnout state to sea level."""
    return_phase = plan.phases[-1]

    def rhs(t, x):
        return dynamics.eom(x, None, return_phase, 0.0, vehicle, earth)

    def impact(t, x):
        return np.linalg.norm(x[0:3]) - earth.r_earth

    impact.terminal = True
    impact.direction = -1.0
    sol = solve_ivp(rhs, (0.0, t_max), x0, events=impact, **_IVP_OPTS)
    if not sol.t_events[0].size:
        raise GuessRejected("return seed never descends to sea level")
    return sol, float(sol.t_events[0][0])


def generate_initial_guess(plan, vehicle, params=GuessParams(), earth=EarthModel(),
                           scales=None):
    """Propagate the tentative steering laws and sample them on the meshes."""
    scales = scales or ScaleSet.from_earth(earth)
    r0, v0 = initial_state(earth, plan.launch_site)
    x = np.concatenate([r0, v0, [vehicle.liftoff_mass(params.m_payload)]])

    durations = {p.index: p.duration for p in plan}
    durations[10] = plan.t_b4 - params.dt12
    durations[11] = params.dt11
    durations[12] = params.dt12

    states, controls, sigmas = {}, {}, {}
    h_hat = None
    min_altitude = np.inf
    burnout_state_8 = None
    for phase in plan:
        if phase.guidance is GuidanceMode.RETURN:
            break
        x = x.copy()
        x[6] -= phase.mass_drop_before
        duration = durations[phase.index]
        offset = plan.burn_offset(phase, durations.get(12, 0.0))
        direction = _direction_fn(phase, plan, x, duration, params.kick_angle, h_hat)
        rhs = _vacuum_rhs(phase, vehicle, earth, direction, offset)
        sol = solve_ivp(rhs, (0.0, duration), x, **_IVP_OPTS)

        mesh = mesh_for_phase(phase)
        t_nodes = mesh.state_taus() * duration
        node_states = sol.sol(t_nodes).T
        states[phase.index] = np.array([scale_state(s, scales) for s in node_states])
        sigmas[phase.index] = duration / scales.tu
        if phase.guidance is GuidanceMode.OPTIMAL:
            stage = vehicle.stages[phase.stage_index]
            u = []
            for t in mesh.collocation_taus() * duration:
                xs = sol.sol(t)
                thrust = stage.vacuum_thrust(min(offset + t, stage.t_b))
                u.append(thrust / xs[6] * direction(t, xs) / scales.au)
            controls[phase.index] = np.array(u)

        rn = np.linalg.norm(sol.sol(np.linspace(0.0, duration, 256))[0:3], axis=0)
        min_altitude = min(min_altitude, float(np.min(rn)) - earth.r_earth)
        if min_altitude < 0.0:
            raise GuessRejected(
                f"guess altitude {min_altitude:.0f} m below sea level in "
                f"phase {phase.index}"
            )
        x = sol.y[:, -1]
        if phase.index == 5:
            h_hat = np.cross(x[0:3], x[3:6])
            h_hat = h_hat / np.linalg.norm(h_hat)
        if phase.index == 8:
            burnout_state_8 = x.copy()

    if plan.has_return:
        phase = plan.phases[-1]
        x13 = burnout_state_8.copy()
        x13[6] = vehicle.stages[2].m_dry
        sol, t_impact = _ballistic_return(x13, plan, vehicle, earth,
                                          t_max=20.0 * phase.duration)
        mesh = mesh_for_phase(phase)
        node_states = sol.sol(mesh.state_taus() * t_impact).T
        states[phase.index] = np.array([scale_state(s, scales) for s in node_states])
        sigmas[phase.index] = t_impact / scales.tu

    return ReferenceTrajectory(states=states, controls=controls, sigmas=sigmas)
