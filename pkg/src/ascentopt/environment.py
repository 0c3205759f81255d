"""Earth model, US Standard Atmosphere 1976, and nondimensional scaling."""

from dataclasses import dataclass, field

import numpy as np

# WGS84 / IAU values; overridable through the run configuration.
MU_EARTH = 3.986004418e14  # m^3/s^2
R_EARTH = 6378137.0  # m
OMEGA_EARTH = 7.2921159e-5  # rad/s

# US76 gas constants
_G0 = 9.80665  # m/s^2
_R_STAR = 8.31432  # J/(mol K)
_M_AIR = 0.0289644  # kg/mol
_R_AIR = _R_STAR / _M_AIR

# Layer base altitudes [m] and lapse rates [K/m], applied to geometric
# altitude (the geopotential correction is below the fidelity relevant here).
_H_BASE = np.array([0.0, 11e3, 20e3, 32e3, 47e3, 51e3, 71e3])
_LAPSE = np.array([-6.5e-3, 0.0, 1.0e-3, 2.8e-3, 0.0, -2.8e-3, -2.0e-3])
_H_TOP = 86e3
_T_SL = 288.15  # K
_P_SL = 101325.0  # Pa
_RHO_SL = _P_SL / (_R_AIR * _T_SL)


def _layer_bases():
    """Temperature and pressure at each layer base, built recursively."""
    t = np.empty(8)
    p = np.empty(8)
    t[0], p[0] = _T_SL, _P_SL
    edges = np.append(_H_BASE, _H_TOP)
    for k in range(7):
        dh = edges[k + 1] - edges[k]
        lapse = _LAPSE[k]
        t[k + 1] = t[k] + lapse * dh
        if lapse == 0.0:
            p[k + 1] = p[k] * np.exp(-_G0 * dh / (_R_AIR * t[k]))
        else:
            p[k + 1] = p[k] * (t[k + 1] / t[k]) ** (-_G0 / (_R_AIR * lapse))
    return t, p


_T_BASE, _P_BASE = _layer_bases()

# Above 86 km the standard tabulates density and pressure from species
# diffusion profiles; log-linear interpolation between the published table
# values gives a piecewise-exponential continuation. The first knot repeats
# the 7-layer model's own 86 km values so the profile stays continuous.
_HI_ALT = np.array([
    86e3, 90e3, 100e3, 110e3, 120e3, 130e3, 140e3, 150e3, 160e3, 180e3,
    200e3, 250e3, 300e3, 350e3, 400e3, 450e3, 500e3, 600e3, 700e3, 800e3,
    900e3, 1000e3,
])
_HI_RHO = np.array([
    _P_BASE[7] / (_R_AIR * _T_BASE[7]),
    3.416e-6, 5.604e-7, 9.708e-8, 2.222e-8, 8.152e-9, 3.831e-9, 2.076e-9,
    1.233e-9, 5.194e-10, 2.541e-10, 6.073e-11, 1.916e-11, 7.014e-12,
    2.803e-12, 1.184e-12, 5.215e-13, 1.137e-13, 3.070e-14, 1.136e-14,
    5.759e-15, 3.561e-15,
])
_HI_P = np.array([
    _P_BASE[7],
    0.1836, 3.201e-2, 7.104e-3, 2.538e-3, 1.250e-3, 7.203e-4, 4.542e-4,
    3.040e-4, 1.527e-4, 8.474e-5, 2.476e-5, 8.770e-6, 3.450e-6, 1.452e-6,
    6.447e-7, 3.024e-7, 8.213e-8, 3.191e-8, 1.704e-8, 1.087e-8, 7.514e-9,
])
_HI_LOG_RHO = np.log(_HI_RHO)
_HI_LOG_P = np.log(_HI_P)


@dataclass(frozen=True)
class EarthModel:
    mu: float = MU_EARTH
    r_earth: float = R_EARTH
    omega: float = OMEGA_EARTH

    def __post_init__(self):
        if self.mu <= 0 or self.r_earth <= 0 or self.omega < 0:
            raise ValueError("EarthModel parameters must be positive")

    @property
    def omega_vec(self):
        return np.array([0.0, 0.0, self.omega])

    def surface_gravity(self):
        return self.mu / self.r_earth**2


@dataclass(frozen=True)
class AtmosphereSample:
    density: float  # kg/m^3
    pressure: float  # Pa
    d_density_d_alt: float  # kg/m^4
    d_pressure_d_alt: float  # Pa/m


def atmosphere(alt_m):
    """US76 density/pressure and their analytic altitude gradients.

    The seven lapse-rate layers are used up to 86 km; above, the published
    table values up to 1000 km are interpolated log-linearly (piecewise
    exponential), held constant beyond. Below sea level the sea-level
    sample is returned.
    """
    if alt_m < 0.0:
        return AtmosphereSample(
            _RHO_SL,
            _P_SL,
            -_RHO_SL * (_G0 / (_R_AIR * _T_SL) + _LAPSE[0] / _T_SL),
            -_G0 * _P_SL / (_R_AIR * _T_SL),
        )
    if alt_m >= _H_TOP:
        if alt_m >= _HI_ALT[-1]:
            return AtmosphereSample(_HI_RHO[-1], _HI_P[-1], 0.0, 0.0)
        k = int(np.searchsorted(_HI_ALT, alt_m, side="right") - 1)
        span = _HI_ALT[k + 1] - _HI_ALT[k]
        f = (alt_m - _HI_ALT[k]) / span
        rho = np.exp(_HI_LOG_RHO[k] + f * (_HI_LOG_RHO[k + 1] - _HI_LOG_RHO[k]))
        p = np.exp(_HI_LOG_P[k] + f * (_HI_LOG_P[k + 1] - _HI_LOG_P[k]))
        return AtmosphereSample(
            rho,
            p,
            rho * (_HI_LOG_RHO[k + 1] - _HI_LOG_RHO[k]) / span,
            p * (_HI_LOG_P[k + 1] - _HI_LOG_P[k]) / span,
        )
    k = int(np.searchsorted(_H_BASE, alt_m, side="right") - 1)
    lapse = _LAPSE[k]
    tb, pb = _T_BASE[k], _P_BASE[k]
    dh = alt_m - _H_BASE[k]
    t = tb + lapse * dh
    if lapse == 0.0:
        p = pb * np.exp(-_G0 * dh / (_R_AIR * tb))
    else:
        p = pb * (t / tb) ** (-_G0 / (_R_AIR * lapse))
    rho = p / (_R_AIR * t)
    dp = -_G0 * p / (_R_AIR * t)  # hydrostatic equilibrium
    drho = rho * (-_G0 / (_R_AIR * t) - lapse / t)
    return AtmosphereSample(rho, p, drho, dp)


def gravity_accel(r, earth=EarthModel()):
    """Keplerian gravitational acceleration -mu r / |r|^3."""
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn < 0.1 * earth.r_earth:
        raise ValueError(f"degenerate position: |r| = {rn:.3e} m")
    return -earth.mu * r / rn**3


@dataclass(frozen=True)
class ScaleSet:
    """Nondimensionalization units: DU = R_E, VU = circular velocity at R_E."""

    du: float
    vu: float
    tu: float
    mu_mass: float
    state_units: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if min(self.du, self.vu, self.tu, self.mu_mass) <= 0:
            raise ValueError("scale units must be positive")
        if abs(self.tu - self.du / self.vu) > 1e-9 * self.tu:
            raise ValueError("TU must equal DU/VU")
        object.__setattr__(
            self,
            "state_units",
            np.array([self.du] * 3 + [self.vu] * 3 + [self.mu_mass]),
        )

    @classmethod
    def from_earth(cls, earth=EarthModel(), mass_unit=10000.0):
        du = earth.r_earth
        vu = np.sqrt(earth.mu / earth.r_earth)
        return cls(du=du, vu=vu, tu=du / vu, mu_mass=mass_unit)

    @property
    def au(self):
        """Acceleration unit VU/TU."""
        return self.vu / self.tu


def scale_state(x, scales):
    return np.asarray(x, dtype=float) / scales.state_units


def unscale_state(x, scales):
    return np.asarray(x, dtype=float) * scales.state_units
