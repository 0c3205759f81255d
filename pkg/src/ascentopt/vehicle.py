"""Launch vehicle configuration: staging, propulsion laws, aerodynamics."""

from dataclasses import dataclass



@dataclass(frozen=True)
class Stage:
    """One stage with linear-in-time vacuum thrust and ejected mass flow."""

    m_p: float  # propellant mass [kg]
    m_dry: float  # dry mass [kg]
    t_b: float  # burn time [s]
    t_vac_0: float  # vacuum thrust at ignition [N]
    t_vac_tb: float  # vacuum thrust at burnout [N]
    mdot_0: float  # mass flow at ignition [kg/s]
    mdot_tb: float  # mass flow at burnout [kg/s]
    a_e: float  # nozzle exit area [m^2]

    def __post_init__(self):
        if self.t_b <= 0:
            raise ValueError("burn time must be positive")
        for name in ("m_p", "m_dry", "t_vac_0", "t_vac_tb", "mdot_0", "mdot_tb", "a_e"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        integral = 0.5 * (self.mdot_0 + self.mdot_tb) * self.t_b
        if abs(integral - self.m_p) > 1e-6 * self.m_p:
            raise ValueError(
                f"mass-flow law integrates to {integral:.6f} kg, not m_p = {self.m_p} kg"
            )

    def _check_window(self, t_ign):
        if t_ign < -1e-9 or t_ign > self.t_b + 1e-9:
            raise ValueError(f"t_ign = {t_ign} s outside burn window [0, {self.t_b}]")

    def vacuum_thrust(self, t_ign):
        """Vacuum thrust [N] at time since ignition."""
        self._check_window(t_ign)
        f = t_ign / self.t_b
        return (1.0 - f) * self.t_vac_0 + f * self.t_vac_tb

    def mass_flow(self, t_ign):
        """Ejected mass flow [kg/s] at time since ignition."""
        self._check_window(t_ign)
        f = t_ign / self.t_b
        return (1.0 - f) * self.mdot_0 + f * self.mdot_tb

    def burned_propellant(self, t_ign):
        """Propellant consumed over [0, t_ign]; the full burn consumes m_p."""
        self._check_window(t_ign)
        return 0.5 * (self.mdot_0 + self.mass_flow(t_ign)) * t_ign


def _impulse_consistent(m_p, m_dry, t_b, t0, ttb, md0, mdtb, a_e):
    """Stage with mass-flow endpoints rescaled so the trapezoid equals m_p.

    Published tables round the endpoints to ~5 digits; the rescale (a few
    parts in 1e5) restores exact propellant bookkeeping. Thrust endpoints
    are kept as printed.
    """
    integral = 0.5 * (md0 + mdtb) * t_b
    k = m_p / integral
    return Stage(m_p, m_dry, t_b, t0, ttb, k * md0, k * mdtb, a_e)


@dataclass(frozen=True)
class VehicleModel:
    stages: tuple  # ordered Stage tuple
    m_fairing: float  # [kg]
    c_d: float  # drag coefficient
    s_ref: float  # reference surface [m^2]

    def __post_init__(self):
        if self.c_d <= 0 or self.s_ref <= 0:
            raise ValueError("c_d and s_ref must be positive")
        object.__setattr__(self, "stages", tuple(self.stages))

    def liftoff_mass(self, m_payload):
        """Total mass at ignition for a given payload."""
        if m_payload < 0:
            raise ValueError("payload mass must be nonnegative")
        return (
            sum(s.m_p + s.m_dry for s in self.stages)
            + self.m_fairing
            + m_payload
        )

    def drag_area(self):
        return self.c_d * self.s_ref


def vega_vehicle():
    """Default four-stage VEGA-like vehicle."""
    stages = (
        _impulse_consistent(87898.0, 8417.7, 102.0, 2827.37e3, 1884.91e3, 1034.09, 689.40, 3.092),
        _impulse_consistent(23926.0, 2563.8, 75.0, 1075.73e3, 717.15e3, 382.81, 255.21, 1.697),
        _impulse_consistent(10006.0, 1326.5, 110.0, 299.81e3, 221.60e3, 104.61, 77.32, 1.183),
        _impulse_consistent(397.6, 813.7, 502.1, 2.4509e3, 2.4509e3, 0.7919, 0.7919, 0.07),
    )
    return VehicleModel(stages=stages, m_fairing=535.3, c_d=0.381, s_ref=9.079)
