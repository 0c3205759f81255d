"""3-DoF equations of motion in all guidance modes, with analytic partials.

States are SI 7-vectors (r, v, m). Thrust is split per guidance mode: radial
in vertical ascent, along the relative velocity in the gravity turn, and a
free acceleration vector u in optimally-guided arcs.
"""

from dataclasses import dataclass

import numpy as np

from .environment import EarthModel, atmosphere
from .mission import GuidanceMode

V_REL_GUARD = 1e-6  # m/s; below this the relative-velocity direction is undefined

B_TILDE = np.zeros((7, 3))
B_TILDE[3:6, :] = np.eye(3)


@dataclass(frozen=True)
class DynamicsJacobians:
    a_mat: np.ndarray  # d f / d x, 7x7
    f_val: np.ndarray  # f(x_ref, u_ref), 7

    @property
    def b_mat(self):
        return B_TILDE


@dataclass(frozen=True)
class HeatFluxSample:
    qdot: float  # W/m^2
    d_qdot_d_r: np.ndarray
    d_qdot_d_v: np.ndarray


def _skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def relative_velocity(x, earth=EarthModel()):
    x = np.asarray(x, dtype=float)
    return x[3:6] - np.cross(earth.omega_vec, x[0:3])


def drag_force(x, atmo, vehicle, earth=EarthModel()):
    """Aerodynamic drag force vector [N]."""
    vr = relative_velocity(x, earth)
    nv = np.linalg.norm(vr)
    if nv < V_REL_GUARD:
        return np.zeros(3)
    return -0.5 * vehicle.drag_area() * atmo.density * nv * vr


def _thrust_and_flow(vehicle, phase, t_ign, pressure):
    stage = vehicle.stages[phase.stage_index]
    t_vac = stage.vacuum_thrust(t_ign)
    return t_vac - pressure * stage.a_e, stage.mass_flow(t_ign), stage


def eom(x, u, phase, t_ign, vehicle, earth=EarthModel()):
    """State derivative f(x, u, t) for the phase's guidance mode."""
    x = np.asarray(x, dtype=float)
    r, v, m = x[0:3], x[3:6], x[6]
    if m <= 0.0:
        raise ValueError("nonpositive mass")
    mode = phase.guidance
    if mode is GuidanceMode.OPTIMAL and u is None:
        raise ValueError("optimal-guidance phase requires a control")

    rn = np.linalg.norm(r)
    atmo = atmosphere(rn - earth.r_earth)
    acc = -earth.mu * r / rn**3
    vr = relative_velocity(x, earth)
    nv = np.linalg.norm(vr)

    mdot = 0.0
    if mode.powered:
        thrust, mdot, _ = _thrust_and_flow(vehicle, phase, t_ign, atmo.pressure)
    if mode is GuidanceMode.VERTICAL:
        acc = acc + thrust / m * (r / rn)
    elif mode is GuidanceMode.OPTIMAL:
        acc = acc + np.asarray(u, dtype=float)
    # drag, plus relative-velocity thrust in the gravity turn
    if nv >= V_REL_GUARD:
        t_b = thrust if mode is GuidanceMode.ZLGT else 0.0
        drag = 0.5 * vehicle.drag_area() * atmo.density * nv**2
        acc = acc + (t_b - drag) / m * (vr / nv)
    return np.concatenate([v, acc, [-mdot]])


def state_jacobian(x, phase, t_ign, vehicle, earth=EarthModel()):
    """Analytic d f / d x along with f itself (control-independent part
    evaluated with u = 0; the control enters through the constant B map)."""
    x = np.asarray(x, dtype=float)
    r, v, m = x[0:3], x[3:6], x[6]
    if m <= 0.0:
        raise ValueError("nonpositive mass")
    mode = phase.guidance
    rn = np.linalg.norm(r)
    rhat = r / rn
    atmo = atmosphere(rn - earth.r_earth)
    vr = relative_velocity(x, earth)
    nv = np.linalg.norm(vr)
    omega_skew = _skew(earth.omega_vec)

    a = np.zeros((7, 7))
    a[0:3, 3:6] = np.eye(3)
    # gravity gradient
    dadr = -earth.mu * (np.eye(3) / rn**3 - 3.0 * np.outer(r, r) / rn**5)
    dadv = np.zeros((3, 3))
    dadm = np.zeros(3)
    acc = -earth.mu * r / rn**3

    mdot = 0.0
    thrust = 0.0
    stage = None
    if mode.powered:
        thrust, mdot, stage = _thrust_and_flow(vehicle, phase, t_ign, atmo.pressure)
    if mode is GuidanceMode.VERTICAL:
        at = thrust / m * rhat
        acc = acc + at
        dadr += (thrust / m) * (np.eye(3) - np.outer(rhat, rhat)) / rn
        dadr += np.outer(rhat, -stage.a_e * atmo.d_pressure_d_alt * rhat / m)
        dadm += -at / m
    if nv >= V_REL_GUARD:
        vhat = vr / nv
        t_b = thrust if mode is GuidanceMode.ZLGT else 0.0
        kd = 0.5 * vehicle.drag_area() / m
        a_vr = (t_b / m - kd * atmo.density * nv**2) * vhat  # along-v_rel acceleration
        acc = acc + a_vr
        # sensitivity to v_rel, chained to r (via -Omega) and v (identity)
        d_vr = (t_b / m) * (np.eye(3) - np.outer(vhat, vhat)) / nv
        d_vr += -kd * atmo.density * (nv * np.eye(3) + np.outer(vr, vr) / nv)
        dadv += d_vr
        dadr += d_vr @ (-omega_skew)
        # density (and nozzle back-pressure) variation with altitude
        dadr += np.outer(-kd * atmo.d_density_d_alt * nv * vr, rhat)
        if mode is GuidanceMode.ZLGT:
            dadr += np.outer(vhat, -stage.a_e * atmo.d_pressure_d_alt * rhat / m)
        dadm += -a_vr / m
    a[3:6, 0:3] = dadr
    a[3:6, 3:6] = dadv
    a[3:6, 6] = dadm
    f = np.concatenate([v, acc, [-mdot]])
    return DynamicsJacobians(a_mat=a, f_val=f)


def heat_flux(x, earth=EarthModel()):
    """Free-stream heating proxy 0.5 rho |v_rel|^3 and its state gradients."""
    x = np.asarray(x, dtype=float)
    r = x[0:3]
    rn = np.linalg.norm(r)
    atmo = atmosphere(rn - earth.r_earth)
    vr = relative_velocity(x, earth)
    nv = np.linalg.norm(vr)
    if nv < V_REL_GUARD or atmo.density == 0.0:
        return HeatFluxSample(0.0, np.zeros(3), np.zeros(3))
    qdot = 0.5 * atmo.density * nv**3
    d_r = 0.5 * atmo.d_density_d_alt * nv**3 * (r / rn) + 1.5 * atmo.density * nv * np.cross(
        earth.omega_vec, vr
    )
    d_v = 1.5 * atmo.density * nv * vr
    return HeatFluxSample(qdot, d_r, d_v)


def u_n_linear_coefficients(x_ref, phase, t_ign, vehicle, earth=EarthModel()):
    """Affine expansion of the thrust-to-mass ratio T(r)/m about x_ref.

    Returns (value, d_dm, d_dr) with
    u_N = value + d_dm * (m - m_ref) + d_dr . (r - r_ref).
    """
    if phase.guidance is not GuidanceMode.OPTIMAL:
        raise ValueError("u_N applies to optimal-guidance phases only")
    x_ref = np.asarray(x_ref, dtype=float)
    r, m = x_ref[0:3], x_ref[6]
    rn = np.linalg.norm(r)
    atmo = atmosphere(rn - earth.r_earth)
    thrust, _, stage = _thrust_and_flow(vehicle, phase, t_ign, atmo.pressure)
    value = thrust / m
    d_dm = -thrust / m**2
    d_dr = -(stage.a_e * atmo.d_pressure_d_alt / m) * (r / rn)
    return value, d_dm, d_dr
