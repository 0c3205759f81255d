"""Successive convexification driver: linearize, solve, filter, repeat."""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import socp
from .environment import EarthModel, ScaleSet
from .initial_guess import GuessParams, ReferenceTrajectory, generate_initial_guess
from .transcription import TranscriptionWeights, assemble_subproblem, decode_solution

__all__ = [
    "ScvxConfig",
    "ScvxIterationRecord",
    "ScvxResult",
    "ScvxError",
    "GuessParams",
    "ReferenceTrajectory",
    "generate_initial_guess",
    "filter_update",
    "check_convergence",
    "extend_with_return",
    "run",
]


class ScvxError(RuntimeError):
    """Raised when the iteration cannot continue; carries partial history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass(frozen=True)
class ScvxConfig:
    weights: TranscriptionWeights = field(default_factory=TranscriptionWeights)
    tol: float = 1e-4  # infinity-norm threshold on scaled state change
    max_iters: int = 40
    filter_weights: tuple = (6 / 11, 3 / 11, 2 / 11)
    heat_flux_max: float = 900.0  # [W/m^2]
    # Trust-cap decay: past `trust_decay_start` iterations the duration caps
    # shrink geometrically by `trust_decay_rate` per iteration (down to
    # `trust_scale_min` of their base values). The fixed caps can sustain a
    # bound-saturated oscillation of the long-coast duration along the nearly
    # flat valley of the objective; shrinking the caps quenches it and lets
    # the state iteration contract under the filter.
    trust_decay_start: int = 18
    trust_decay_rate: float = 0.5
    trust_scale_min: float = 2.0**-10
    # The converged subproblem is re-solved once at this tighter conic
    # tolerance: complementarity slack on weakly-active cone rows scales
    # with the duality gap, so the polish pass drives the relaxation error
    # | ||u|| - u_N | down to solver precision without risking numerical
    # trouble during the main iteration.
    polish_tol: float = 1e-12
    solver: socp.SolverSettings = field(default_factory=socp.SolverSettings)
    verbose: bool = False

    def __post_init__(self):
        if abs(sum(self.filter_weights) - 1.0) > 1e-12:
            raise ValueError("filter weights must sum to 1")
        if min(self.filter_weights) <= 0:
            raise ValueError("filter weights must be positive")
        if self.tol <= 0 or self.max_iters < 1:
            raise ValueError("invalid tolerance or iteration budget")
        if self.trust_decay_start < 1 or not 0.0 < self.trust_decay_rate <= 1.0:
            raise ValueError("invalid trust-cap decay schedule")
        if self.polish_tol <= 0:
            raise ValueError("polish tolerance must be positive")
        if not 0.0 < self.trust_scale_min <= 1.0:
            raise ValueError("trust_scale_min must lie in (0, 1]")

    def trust_scale(self, iteration):
        """Cap multiplier applied at a given (1-based) iteration."""
        excess = max(0, iteration - self.trust_decay_start)
        return max(self.trust_scale_min, self.trust_decay_rate**excess)


@dataclass
class ScvxIterationRecord:
    iteration: int
    objective: float
    final_mass: float  # scaled
    q_l1: float
    w_l1: float
    convergence_norm: float
    sigmas: dict
    solver_status: str
    solver_iterations: int
    wall_time: float


@dataclass
class ScvxResult:
    trajectory: object  # SubproblemSolution of the accepted iterate
    reference: ReferenceTrajectory  # reference the final iterate linearized about
    history: list
    converged: bool

    @property
    def iterations(self):
        return len(self.history)


def filter_update(history, guess, weights=(6 / 11, 3 / 11, 2 / 11)):
    """Reference as a convex combination of the most recent iterates.

    history is ordered oldest-to-newest; the initial guess stands in for
    missing entries when fewer than len(weights) iterates exist.
    """
    if not history:
        raise ValueError("at least one solved iterate is required")
    picks = []
    for k in range(len(weights)):
        j = len(history) - 1 - k
        picks.append(history[j] if j >= 0 else guess)

    out = guess.copy()
    out.provenance = "filtered"
    for key in out.states:
        out.states[key] = sum(
            w * p.states[key] for w, p in zip(weights, picks)
        )
    for key in out.controls:
        out.controls[key] = sum(
            w * p.controls[key] for w, p in zip(weights, picks)
        )
    for key in out.sigmas:
        out.sigmas[key] = sum(w * p.sigmas[key] for w, p in zip(weights, picks))
    return out


def check_convergence(current, reference, tol):
    """Infinity norm of the scaled state change over all phases."""
    norm = 0.0
    for key, x in current.states.items():
        norm = max(norm, float(np.max(np.abs(x - reference.states[key]))))
    return norm < tol, norm


def _as_reference(sub, reference):
    sigmas = dict(reference.sigmas)  # fixed-phase durations never change
    sigmas.update(sub.sigmas)
    return ReferenceTrajectory(
        states={k: np.asarray(v) for k, v in sub.states.items()},
        controls={k: np.asarray(v) for k, v in sub.controls.items()},
        sigmas=sigmas,
        provenance="iterate",
    )


def extend_with_return(trajectory, plan, vehicle, earth=EarthModel(),
                       scales=None):
    """Reference for a splash-constrained plan, built from an ascent solution.

    The ascent phases are reused as-is; the return phase is seeded by
    simulating the spent-stage descent from the third-stage burnout state and
    sampling it on the return mesh.
    """
    from .collocation import mesh_for_phase
    from .environment import scale_state
    from .validate import simulate_return

    scales = scales or ScaleSet.from_earth(earth)
    return_phase = plan.phases[-1]
    if return_phase.guidance.name != "RETURN":
        raise ValueError("plan has no return phase to seed")
    ret = simulate_return(trajectory, plan, vehicle, earth, scales)
    mesh = mesh_for_phase(return_phase)
    taus = mesh.state_taus() * ret.flight_time
    t_rel = ret.times - ret.times[0]
    nodes = np.empty((len(taus), 7))
    for k in range(7):
        nodes[:, k] = np.interp(taus, t_rel, ret.states[:, k])
    states = {i: np.asarray(x).copy() for i, x in trajectory.states.items()}
    states[return_phase.index] = np.array(
        [scale_state(x, scales) for x in nodes])
    sigmas = dict(trajectory.sigmas)
    for phase in plan:
        if phase.fixed and phase.index not in sigmas:
            sigmas[phase.index] = phase.duration / scales.tu
    sigmas[return_phase.index] = ret.flight_time / scales.tu
    return ReferenceTrajectory(
        states=states,
        controls={i: np.asarray(u).copy() for i, u in trajectory.controls.items()},
        sigmas=sigmas,
        provenance="warm_start",
    )


def run(plan, vehicle, config=ScvxConfig(), guess=None, earth=EarthModel(),
        scales=None, guess_params=GuessParams()):
    """Iterate convex subproblems from `guess` until the reference settles."""
    scales = scales or ScaleSet.from_earth(earth)
    if guess is None:
        guess = generate_initial_guess(plan, vehicle, guess_params, earth, scales)
    # free-phase durations must be keyed consistently with the plan
    for i in plan.free_indices:
        if i not in guess.sigmas:
            raise ValueError(f"guess provides no duration for phase {i}")

    reference = guess
    iterate_history = []  # ReferenceTrajectory views of solved iterates
    records = []
    solution = None
    for it in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        scale = config.trust_scale(it)
        weights = config.weights
        if scale < 1.0:
            weights = replace(
                weights,
                delta_max_frac_coast=scale * weights.delta_max_frac_coast,
                delta_max_frac_burn=scale * weights.delta_max_frac_burn,
            )
        prob, idx = assemble_subproblem(
            reference, plan, vehicle, weights, earth, scales,
            heat_flux_max=config.heat_flux_max,
        )
        sol = socp.solve(prob, config.solver)
        if sol.status == "numerical_error":
            retry = replace(
                config.solver,
                static_reg=10.0 * config.solver.static_reg,
                tol=max(config.solver.tol, 1e-8),
            )
            sol = socp.solve(prob, retry)
        if sol.status not in ("optimal",):
            raise ScvxError(
                f"subproblem not solved at iteration {it}: {sol.status}",
                history=records,
            )
        solution = decode_solution(sol.x, idx, sol.objective)
        current = _as_reference(solution, reference)
        converged, norm = check_convergence(current, reference, config.tol)
        records.append(
            ScvxIterationRecord(
                iteration=it,
                objective=sol.objective,
                final_mass=solution.final_mass,
                q_l1=solution.q_l1,
                w_l1=solution.w_l1,
                convergence_norm=norm,
                sigmas=dict(solution.sigmas),
                solver_status=sol.status,
                solver_iterations=sol.iterations,
                wall_time=time.perf_counter() - t0,
            )
        )
        if config.verbose:
            print(
                f"iter {it:3d}  J = {sol.objective: .8f}  "
                f"m_f = {solution.final_mass * scales.mu_mass:9.2f} kg  "
                f"|dx| = {norm:.3e}  |q| = {solution.q_l1:.2e}  "
                f"|w| = {solution.w_l1:.2e}"
            )
        if converged:
            if config.polish_tol < config.solver.tol:
                polished = socp.solve(
                    prob, replace(config.solver, tol=config.polish_tol))
                if polished.status == "optimal":
                    solution = decode_solution(
                        polished.x, idx, polished.objective)
            return ScvxResult(
                trajectory=solution,
                reference=reference,
                history=records,
                converged=True,
            )
        iterate_history.append(current)
        reference = filter_update(iterate_history, guess, config.filter_weights)

    return ScvxResult(
        trajectory=solution, reference=reference, history=records, converged=False
    )
