"""Subproblem assembly: decision-vector layout oracle, linearization
consistency, and feasibility structure of a solved subproblem."""

import numpy as np
import pytest

from ascentopt import socp
from ascentopt.environment import EarthModel, ScaleSet
from ascentopt.initial_guess import generate_initial_guess
from ascentopt.mission import (GuidanceMode, Schedule, SplashDownSpec,
                               TargetOrbit, build_phase_plan, initial_state)
from ascentopt.transcription import (SubproblemIndex, TranscriptionWeights,
                                     _scaled_node_linearization,
                                     assemble_subproblem, decode_solution)
from ascentopt.vehicle import vega_vehicle

EARTH = EarthModel()
SCALES = ScaleSet.from_earth(EARTH)
VEH = vega_vehicle()


def plan_for(splash=None):
    return build_phase_plan(VEH, Schedule(),
                            TargetOrbit(EARTH.r_earth + 700e3, np.pi / 2),
                            SplashDownSpec(splash))


class TestWeights:
    def test_defaults(self):
        w = TranscriptionWeights()
        assert w.lambda_delta == 1e-4
        assert w.lambda_q == 1e4
        assert w.lambda_w == 1e4

    def test_cap_fraction_by_phase(self):
        w = TranscriptionWeights(delta_max_frac_coast=0.02,
                                 delta_max_frac_burn=0.07)
        assert w.delta_max_frac(11) == 0.02
        assert w.delta_max_frac(12) == 0.07

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            TranscriptionWeights(lambda_q=0.0)
        with pytest.raises(ValueError):
            TranscriptionWeights(delta_max_frac_coast=0.2)
        with pytest.raises(ValueError):
            TranscriptionWeights(delta_max_frac_burn=0.0)


class TestLayout:
    def _expected_vars(self, plan):
        total = 0
        for p in plan:
            m = p.n_collocation_nodes
            total += 7 * p.n_state_nodes + 14 * m
            if p.guidance is GuidanceMode.OPTIMAL:
                total += 4 * m
        total += len(plan.free_indices)  # durations
        total += 2  # trust radii on the free coast and burn split
        total += 2 * (6 if plan.has_return else 4)  # split buffers
        return total

    def test_variable_count_unconstrained(self):
        plan = plan_for()
        idx = SubproblemIndex(plan, 900.0)
        assert idx.n_vars == self._expected_vars(plan)

    def test_variable_count_constrained(self):
        plan = plan_for(np.radians(60.0))
        idx = SubproblemIndex(plan, 900.0)
        assert idx.n_vars == self._expected_vars(plan)

    def test_decode_roundtrips_layout(self):
        plan = plan_for(np.radians(60.0))
        idx = SubproblemIndex(plan, 900.0)
        x = np.arange(idx.n_vars, dtype=float)
        sol = decode_solution(x, idx, objective=0.0)
        # spot-check every block against the index arithmetic
        assert sol.states[1][0, 0] == x[idx.x(1, 0, 0)]
        assert sol.states[8][3, 5] == x[idx.x(8, 3, 5)]
        assert sol.controls[10][2, 1] == x[idx.u(10, 2, 1)]
        assert sol.u_norms[12][4] == x[idx.u(12, 4, 3)]
        for i in plan.free_indices:
            assert sol.sigmas[i] == x[idx.sigma_idx[i]]
        assert sol.deltas[11] == x[idx.delta_idx[11]]
        nf = idx.meshes[12].n_state_nodes - 1
        assert sol.final_mass == x[idx.x(12, nf, 6)]

    def test_blocks_are_disjoint(self):
        plan = plan_for()
        idx = SubproblemIndex(plan, 900.0)
        seen = set()
        for p in plan:
            i = p.index
            cols = [idx.x(i, n, c) for n in range(p.n_state_nodes)
                    for c in range(7)]
            if p.guidance is GuidanceMode.OPTIMAL:
                cols += [idx.u(i, k, c) for k in range(p.n_collocation_nodes)
                         for c in range(4)]
            cols += [idx.q(i, k, c, neg) for k in range(p.n_collocation_nodes)
                     for c in range(7) for neg in (False, True)]
            assert not seen.intersection(cols)
            seen.update(cols)
        assert len(seen) <= idx.n_vars


class TestLinearization:
    def test_exact_at_reference(self):
        plan = plan_for()
        phase = plan.phase(8)
        rng = np.random.default_rng(31)
        x = np.array([1.01, 0.01, 0.02, 0.1, 0.9, 0.05, 1.8])
        u = rng.standard_normal(3) * 0.1
        sigma = 104.6 / SCALES.tu
        a, sig_vec, c = _scaled_node_linearization(x, u, phase, 20.0, sigma,
                                                   VEH, EARTH, SCALES)
        # the affine model A x + sig_vec sigma + sigma_ref B u + c must
        # reproduce sigma * f(x_ref, u_ref) exactly at the reference point
        from ascentopt import dynamics
        model = a @ x + sig_vec * sigma + sigma * (dynamics.B_TILDE @ u) + c
        from ascentopt.environment import unscale_state
        f = dynamics.eom(unscale_state(x, SCALES), u * SCALES.au, phase, 20.0,
                         VEH, EARTH)
        f_scl = SCALES.tu * f / SCALES.state_units
        assert np.allclose(model, sigma * f_scl, rtol=1e-12, atol=1e-14)

    def test_second_order_remainder(self):
        # halving the state perturbation must quarter the Taylor remainder
        plan = plan_for()
        phase = plan.phase(8)
        rng = np.random.default_rng(37)
        x = np.array([1.005, 0.03, 0.01, 0.2, 0.85, 0.1, 1.5])
        u = np.zeros(3)
        sigma = 104.6 / SCALES.tu
        a, sig_vec, c = _scaled_node_linearization(x, u, phase, 20.0, sigma,
                                                   VEH, EARTH, SCALES)
        from ascentopt import dynamics
        from ascentopt.environment import unscale_state

        def f_scl(xs):
            f = dynamics.eom(unscale_state(xs, SCALES), u, phase, 20.0, VEH,
                             EARTH)
            return SCALES.tu * f / SCALES.state_units

        dx = rng.standard_normal(7) * 1e-3
        rems = []
        for scale in (1.0, 0.5):
            xp = x + scale * dx
            model = a @ xp + sig_vec * sigma + c
            rems.append(np.linalg.norm(sigma * f_scl(xp) - model))
        assert rems[0] / rems[1] == pytest.approx(4.0, rel=0.2)


@pytest.fixture(scope="module")
def solved_subproblem():
    plan = plan_for()
    guess = generate_initial_guess(plan, VEH, earth=EARTH, scales=SCALES)
    weights = TranscriptionWeights()
    prob, idx = assemble_subproblem(guess, plan, VEH, weights, EARTH, SCALES)
    sol = socp.solve(prob, socp.SolverSettings(tol=1e-9))
    assert sol.status == "optimal"
    return plan, guess, weights, idx, decode_solution(sol.x, idx, sol.objective)


class TestSolvedSubproblem:
    def test_initial_conditions(self, solved_subproblem):
        plan, guess, weights, idx, dec = solved_subproblem
        r0, v0 = initial_state(EARTH, plan.launch_site)
        x0 = np.concatenate([r0, v0]) / SCALES.state_units[:6]
        assert np.allclose(dec.states[1][0][:6], x0, atol=1e-8)

    def test_linkage_mass_jumps(self, solved_subproblem):
        plan, guess, weights, idx, dec = solved_subproblem
        for prev, nxt in zip(plan.phases[:-1], plan.phases[1:]):
            xp = dec.states[prev.index][-1]
            xn = dec.states[nxt.index][0]
            assert np.allclose(xn[:6], xp[:6], atol=1e-8)
            drop = nxt.mass_drop_before / SCALES.mu_mass
            assert xn[6] == pytest.approx(xp[6] - drop, abs=1e-8)

    def test_trust_region_honored(self, solved_subproblem):
        plan, guess, weights, idx, dec = solved_subproblem
        for i in (11, 12):
            cap = weights.delta_max_frac(i) * guess.sigmas[i]
            step = abs(dec.sigmas[i] - guess.sigmas[i])
            assert step <= dec.deltas[i] + 1e-7
            assert dec.deltas[i] <= cap + 1e-7

    def test_burn_split_sums_to_stage_burn_time(self, solved_subproblem):
        plan, guess, weights, idx, dec = solved_subproblem
        assert dec.sigmas[10] + dec.sigmas[12] == pytest.approx(
            plan.t_b4 / SCALES.tu, abs=1e-9)

    def test_cone_feasibility(self, solved_subproblem):
        plan, guess, weights, idx, dec = solved_subproblem
        for i, u in dec.controls.items():
            norms = np.linalg.norm(u, axis=1)
            assert np.all(norms <= dec.u_norms[i] + 1e-7)

    def test_durations_positive(self, solved_subproblem):
        plan, guess, weights, idx, dec = solved_subproblem
        for i, s in dec.sigmas.items():
            assert s > 0.0

    def test_virtual_terms_small_from_consistent_guess(self, solved_subproblem):
        # the guess satisfies the nonlinear dynamics, so virtual controls
        # absorb only the linearization error of the first step
        plan, guess, weights, idx, dec = solved_subproblem
        assert dec.q_l1 < 1e-2
        assert dec.w_l1 < 1e-2
