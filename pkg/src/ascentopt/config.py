"""Run configuration: nested-block YAML with case-study defaults.

Every field defaults to the reference mission (700 km polar orbit, VEGA
vehicle, standard weights and meshes), so an empty config file runs the
baseline case. Unknown keys are rejected so typos fail loudly instead of
silently falling back to defaults.
"""

from dataclasses import dataclass, field, fields, replace

import numpy as np
import yaml

from . import socp
from .environment import EarthModel, ScaleSet
from .initial_guess import GuessParams
from .mission import (LaunchSite, Schedule, SplashDownSpec, TargetOrbit,
                      build_phase_plan)
from .scvx import ScvxConfig
from .transcription import TranscriptionWeights
from .vehicle import vega_vehicle


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class EarthBlock:
    mu_m3_s2: float = EarthModel.mu
    r_earth_m: float = EarthModel.r_earth
    omega_rad_s: float = EarthModel.omega


@dataclass(frozen=True)
class MissionBlock:
    target_altitude_m: float = 700e3
    inclination_deg: float = 90.0
    eccentricity: float = 0.0
    splash_latitude_deg: float | None = None  # None: no splash-down constraint
    launch_latitude_deg: float = 0.0


@dataclass(frozen=True)
class ScheduleBlock:
    dt11_guess_s: float = 2500.0
    dt12_guess_s: float = 200.0
    dt13_guess_s: float = 1000.0


@dataclass(frozen=True)
class GuessBlock:
    payload_kg: float = 100.0
    kick_angle_deg: float = 80.0


@dataclass(frozen=True)
class WeightsBlock:
    lambda_delta: float = TranscriptionWeights.lambda_delta
    lambda_q: float = TranscriptionWeights.lambda_q
    lambda_w: float = TranscriptionWeights.lambda_w
    delta_max_frac_coast: float = TranscriptionWeights.delta_max_frac_coast
    delta_max_frac_burn: float = TranscriptionWeights.delta_max_frac_burn


@dataclass(frozen=True)
class ScvxBlock:
    tol: float = ScvxConfig.tol
    max_iters: int = ScvxConfig.max_iters
    heat_flux_max_w_m2: float = ScvxConfig.heat_flux_max
    trust_decay_start: int = ScvxConfig.trust_decay_start
    trust_decay_rate: float = ScvxConfig.trust_decay_rate
    trust_scale_min: float = ScvxConfig.trust_scale_min
    polish_tol: float = ScvxConfig.polish_tol


@dataclass(frozen=True)
class SolverBlock:
    tol: float = socp.SolverSettings.tol
    max_iters: int = socp.SolverSettings.max_iters
    static_reg: float = socp.SolverSettings.static_reg


@dataclass(frozen=True)
class SweepBlock:
    latitudes_deg: tuple = (55.0, 57.0, 60.0, 63.0, 66.0, 69.0, 72.0, 76.0, 80.0)
    chain: bool = True  # warm-start each point from its converged neighbor
    # warm-started points sit near their solution already, so the trust caps
    # may shrink much earlier than in a cold run
    warm_trust_decay_start: int = 6


@dataclass(frozen=True)
class RunConfig:
    earth: EarthBlock = field(default_factory=EarthBlock)
    mission: MissionBlock = field(default_factory=MissionBlock)
    schedule: ScheduleBlock = field(default_factory=ScheduleBlock)
    guess: GuessBlock = field(default_factory=GuessBlock)
    weights: WeightsBlock = field(default_factory=WeightsBlock)
    scvx: ScvxBlock = field(default_factory=ScvxBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    mesh_overrides: dict = field(default_factory=dict)  # phase -> (h, p)
    out_dir: str = "out"
    seed: int = 0

    # -- factories for the solver-facing objects -------------------------

    def build_earth(self):
        return EarthModel(mu=self.earth.mu_m3_s2, r_earth=self.earth.r_earth_m,
                          omega=self.earth.omega_rad_s)

    def build_scales(self, earth=None):
        return ScaleSet.from_earth(earth or self.build_earth())

    def build_vehicle(self):
        return vega_vehicle()

    def build_plan(self, vehicle=None, earth=None, splash_latitude_deg="config"):
        """Phase plan; `splash_latitude_deg` overrides the config block
        (None forces the unconstrained 12-phase plan)."""
        earth = earth or self.build_earth()
        vehicle = vehicle or self.build_vehicle()
        lat = (self.mission.splash_latitude_deg
               if splash_latitude_deg == "config" else splash_latitude_deg)
        schedule = Schedule(dt11_guess=self.schedule.dt11_guess_s,
                            dt12_guess=self.schedule.dt12_guess_s,
                            dt13_guess=self.schedule.dt13_guess_s)
        target = TargetOrbit(earth.r_earth + self.mission.target_altitude_m,
                             np.radians(self.mission.inclination_deg),
                             self.mission.eccentricity)
        splash = SplashDownSpec(
            None if lat is None else float(np.radians(lat)))
        site = LaunchSite(np.radians(self.mission.launch_latitude_deg))
        try:
            return build_phase_plan(vehicle, schedule, target, splash,
                                    launch_site=site,
                                    mesh_overrides=self.mesh_overrides or None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_guess_params(self):
        return GuessParams(m_payload=self.guess.payload_kg,
                           kick_angle=np.radians(self.guess.kick_angle_deg),
                           dt11=self.schedule.dt11_guess_s,
                           dt12=self.schedule.dt12_guess_s)

    def build_scvx_config(self, verbose=False):
        weights = TranscriptionWeights(
            lambda_delta=self.weights.lambda_delta,
            lambda_q=self.weights.lambda_q,
            lambda_w=self.weights.lambda_w,
            delta_max_frac_coast=self.weights.delta_max_frac_coast,
            delta_max_frac_burn=self.weights.delta_max_frac_burn,
        )
        solver = socp.SolverSettings(tol=self.solver.tol,
                                     max_iters=self.solver.max_iters,
                                     static_reg=self.solver.static_reg)
        return ScvxConfig(weights=weights, tol=self.scvx.tol,
                          max_iters=self.scvx.max_iters,
                          heat_flux_max=self.scvx.heat_flux_max_w_m2,
                          trust_decay_start=self.scvx.trust_decay_start,
                          trust_decay_rate=self.scvx.trust_decay_rate,
                          trust_scale_min=self.scvx.trust_scale_min,
                          polish_tol=self.scvx.polish_tol,
                          solver=solver, verbose=verbose)


_BLOCKS = {
    "earth": EarthBlock,
    "mission": MissionBlock,
    "schedule": ScheduleBlock,
    "guess": GuessBlock,
    "weights": WeightsBlock,
    "scvx": ScvxBlock,
    "solver": SolverBlock,
    "sweep": SweepBlock,
}


def _coerce(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "latitudes_deg":
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _coerce_mesh(data):
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("mesh_overrides: expected a mapping phase -> [h, p]")
    out = {}
    for key, value in data.items():
        try:
            phase = int(key)
            h, p = value
            out[phase] = (int(h), int(p))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"mesh_overrides[{key}]: {exc}") from exc
        if not 1 <= phase <= 13 or out[phase][0] < 1 or out[phase][1] < 2:
            raise ConfigError(f"mesh_overrides[{key}]: invalid phase or mesh")
    return out


def config_from_dict(data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level of the config must be a mapping")
    unknown = set(data) - set(_BLOCKS) - {"mesh_overrides", "out_dir", "seed"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    kwargs = {name: _coerce(cls, data.get(name), name)
              for name, cls in _BLOCKS.items()}
    kwargs["mesh_overrides"] = _coerce_mesh(data.get("mesh_overrides"))
    kwargs["out_dir"] = str(data.get("out_dir", "out"))
    try:
        kwargs["seed"] = int(data.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed: {exc}") from exc
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg):
    m = cfg.mission
    if m.target_altitude_m <= 0:
        raise ConfigError("mission.target_altitude_m must be positive")
    if not 0.0 <= m.inclination_deg <= 180.0:
        raise ConfigError("mission.inclination_deg must lie in [0, 180]")
    if m.splash_latitude_deg is not None and abs(m.splash_latitude_deg) > 90:
        raise ConfigError("mission.splash_latitude_deg must lie in [-90, 90]")
    if abs(m.launch_latitude_deg) > 90:
        raise ConfigError("mission.launch_latitude_deg must lie in [-90, 90]")
    for lat in cfg.sweep.latitudes_deg:
        if abs(lat) > 90:
            raise ConfigError("sweep.latitudes_deg must lie in [-90, 90]")
    if not cfg.sweep.latitudes_deg:
        raise ConfigError("sweep.latitudes_deg must not be empty")
    # the remaining numeric ranges are enforced by the target dataclasses
    try:
        cfg.build_scvx_config()
        cfg.build_guess_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(data)


def with_overrides(cfg, out_dir=None, splash_lat=None, unconstrained=False,
                   max_iters=None, tol=None):
    """Apply command-line flag overrides on top of a parsed config."""
    if unconstrained and splash_lat is not None:
        raise ConfigError("--unconstrained conflicts with --splash-lat")
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if unconstrained:
        cfg = replace(cfg, mission=replace(cfg.mission, splash_latitude_deg=None))
    if splash_lat is not None:
        cfg = replace(cfg, mission=replace(cfg.mission,
                                           splash_latitude_deg=float(splash_lat)))
    if max_iters is not None or tol is not None:
        block = cfg.scvx
        if max_iters is not None:
            block = replace(block, max_iters=int(max_iters))
        if tol is not None:
            block = replace(block, tol=float(tol))
        cfg = replace(cfg, scvx=block)
    _validate(cfg)
    return cfg
