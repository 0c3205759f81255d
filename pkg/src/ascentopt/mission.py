"""Flight plan: 13-phase VEGA mission structure, target orbit, launch site."""

import enum
from dataclasses import dataclass

import numpy as np

from .environment import EarthModel

FIXED_DURATIONS = (4.1, 6.6, 91.3, 6.6, 75.0, 37.3, 5.4, 104.6, 15.4)
BASE_MESH_ORDERS = (5, 5, 17, 5, 19, 14, 5, 19, 9, 19, 19, 19)
# default (segments, order) per ascent phase; the two atmospheric zero-lift
# arcs are split in two so the propagated trajectory tracks the collocated
# one tightly enough for the heat-flux bound to carry over to continuous time
DEFAULT_MESH = {3: (4, 17), 5: (4, 19), 10: (2, 19)}
RETURN_MESH = (10, 10)  # (segments, order per segment)


class GuidanceMode(enum.Enum):
    VERTICAL = "vertical"  # thrust along the radial direction
    OPTIMAL = "optimal"  # thrust acceleration is a decision variable
    ZLGT = "zlgt"  # thrust along the relative-to-atmosphere velocity
    COAST = "coast"  # no thrust
    RETURN = "return"  # no thrust, separate falling body

    @property
    def powered(self):
        return self in (GuidanceMode.VERTICAL, GuidanceMode.OPTIMAL, GuidanceMode.ZLGT)


@dataclass(frozen=True)
class Phase:
    index: int  # 1-based chronological index
    guidance: GuidanceMode
    stage_index: int | None  # 0-based stage, None for unpowered phases
    fixed: bool
    duration: float  # fixed length, or initial guess for free phases [s]
    mesh_h: int
    mesh_p: tuple  # per-segment order
    heat_flux_constrained: bool
    burn_clock_offset: float  # time since stage ignition at phase start [s]
    mass_drop_before: float  # mass jettisoned just before this phase [kg]

    @property
    def n_state_nodes(self):
        return sum(self.mesh_p) + 1

    @property
    def n_collocation_nodes(self):
        return sum(self.mesh_p)


@dataclass(frozen=True)
class TargetOrbit:
    a_des: float  # semi-major axis [m]
    i_des: float  # inclination [rad]
    e_des: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.i_des <= np.pi:
            raise ValueError("inclination must lie in [0, pi]")

    def h_z_des(self, earth=EarthModel()):
        if self.a_des <= earth.r_earth:
            raise ValueError("target semi-major axis must exceed the Earth radius")
        return np.cos(self.i_des) * np.sqrt(earth.mu * self.a_des)


@dataclass(frozen=True)
class SplashDownSpec:
    latitude: float | None = None  # desired splash latitude [rad]; None = unconstrained

    def __post_init__(self):
        if self.latitude is not None and abs(self.latitude) > np.pi / 2:
            raise ValueError("splash latitude must lie in [-pi/2, pi/2]")

    @property
    def constrained(self):
        return self.latitude is not None


@dataclass(frozen=True)
class LaunchSite:
    latitude: float = 0.0  # [rad]

    def __post_init__(self):
        if abs(self.latitude) > np.pi / 2:
            raise ValueError("latitude must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class Schedule:
    """Fixed-arc durations and free-arc initial guesses [s]."""

    fixed_durations: tuple = FIXED_DURATIONS
    dt11_guess: float = 2500.0
    dt12_guess: float = 200.0
    dt13_guess: float = 1000.0

    def __post_init__(self):
        if len(self.fixed_durations) != 9:
            raise ValueError("nine fixed-phase durations are required")
        if min(self.fixed_durations) <= 0:
            raise ValueError("fixed durations must be positive")
        if min(self.dt11_guess, self.dt12_guess, self.dt13_guess) <= 0:
            raise ValueError("free-phase guesses must be positive")


_GUIDANCE = {
    1: GuidanceMode.VERTICAL,
    2: GuidanceMode.OPTIMAL,
    3: GuidanceMode.ZLGT,
    4: GuidanceMode.COAST,
    5: GuidanceMode.ZLGT,
    6: GuidanceMode.COAST,
    7: GuidanceMode.OPTIMAL,
    8: GuidanceMode.OPTIMAL,
    9: GuidanceMode.COAST,
    10: GuidanceMode.OPTIMAL,
    11: GuidanceMode.COAST,
    12: GuidanceMode.OPTIMAL,
    13: GuidanceMode.RETURN,
}
_STAGE_OF_PHASE = {1: 0, 2: 0, 3: 0, 5: 1, 7: 2, 8: 2, 10: 3, 12: 3}


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple
    target: TargetOrbit
    splash: SplashDownSpec
    launch_site: LaunchSite
    t_b4: float  # fourth-stage burn time, couples phases 10 and 12 [s]

    def __iter__(self):
        return iter(self.phases)

    def phase(self, index):
        return self.phases[index - 1]

    @property
    def has_return(self):
        return self.phases[-1].guidance == GuidanceMode.RETURN

    @property
    def free_indices(self):
        return tuple(p.index for p in self.phases if not p.fixed)

    def burn_offset(self, phase, sigma):
        """Stage-ignition clock at phase start; phase 12 ignites t_b4 - sigma
        into the fourth-stage burn."""
        if phase.index == 12:
            return self.t_b4 - sigma
        return phase.burn_clock_offset


def build_phase_plan(vehicle, schedule, target, splash, launch_site=LaunchSite(),
                     mesh_overrides=None):
    """Assemble the 13-phase plan (12 when splash-down is unconstrained)."""
    fixed = schedule.fixed_durations
    burn_times = [s.t_b for s in vehicle.stages]
    # stage burn budgets over the fixed schedule
    checks = [
        (fixed[0] + fixed[1] + fixed[2], burn_times[0], "phases 1-3 vs stage-1 burn"),
        (fixed[4], burn_times[1], "phase 5 vs stage-2 burn"),
        (fixed[6] + fixed[7], burn_times[2], "phases 7-8 vs stage-3 burn"),
    ]
    for total, tb, what in checks:
        if abs(total - tb) > 1e-6:
            raise ValueError(f"inconsistent schedule: {what} ({total} vs {tb} s)")
    if schedule.dt12_guess >= burn_times[3]:
        raise ValueError("phase-12 guess exceeds the stage-4 burn time")

    overrides = dict(mesh_overrides or {})
    drops = {
        4: vehicle.stages[0].m_dry,
        6: vehicle.stages[1].m_dry,
        8: vehicle.m_fairing,
        9: vehicle.stages[2].m_dry,
    }
    offsets = {
        1: 0.0,
        2: fixed[0],
        3: fixed[0] + fixed[1],
        8: fixed[6],
    }
    durations = {
        **{i: fixed[i - 1] for i in range(1, 10)},
        10: burn_times[3] - schedule.dt12_guess,
        11: schedule.dt11_guess,
        12: schedule.dt12_guess,
        13: schedule.dt13_guess,
    }

    indices = range(1, 14 if splash.constrained else 13)
    phases = []
    for i in indices:
        if i == 13:
            h, p = overrides.get(13, RETURN_MESH)
            mesh_p = (p,) * h if np.isscalar(p) else tuple(p)
            h = len(mesh_p)
        else:
            default = DEFAULT_MESH.get(i, (1, BASE_MESH_ORDERS[i - 1]))
            h, p = overrides.get(i, default)
            mesh_p = (p,) * h if np.isscalar(p) else tuple(p)
            h = len(mesh_p)
        phases.append(
            Phase(
                index=i,
                guidance=_GUIDANCE[i],
                stage_index=_STAGE_OF_PHASE.get(i),
                fixed=i <= 9,
                duration=durations[i],
                mesh_h=h,
                mesh_p=mesh_p,
                heat_flux_constrained=8 <= i <= 12,
                burn_clock_offset=offsets.get(i, 0.0),
                mass_drop_before=drops.get(i, 0.0),
            )
        )
    return PhasePlan(
        phases=tuple(phases),
        target=target,
        splash=splash,
        launch_site=launch_site,
        t_b4=burn_times[3],
    )


def pitch_over_azimuth(i_des, lat_lb):
    """Launch azimuth reaching inclination i_des from latitude lat_lb
    (non-rotating Earth), measured clockwise from north."""
    arg = np.cos(i_des) / np.cos(lat_lb)
    if abs(arg) > 1.0:
        raise ValueError(
            f"inclination {np.degrees(i_des):.2f} deg unreachable from "
            f"latitude {np.degrees(lat_lb):.2f} deg"
        )
    return np.arcsin(arg)


def initial_state(earth, launch_site):
    """Liftoff position and inertial velocity; the ECI x axis passes through
    the launch meridian at t0, so the effective longitude is zero."""
    lat = launch_site.latitude
    r0 = earth.r_earth * np.array([np.cos(lat), 0.0, np.sin(lat)])
    v0 = np.cross(earth.omega_vec, r0)
    return r0, v0
