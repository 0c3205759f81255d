"""Convex subproblem assembly: linearized collocation over the phase meshes.

Builds one monolithic cone program per iteration: linearized dilated-time
dynamics collocated at the LGR points with virtual controls, phase linkage
with mass jumps, linearized terminal/return rows relaxed by virtual buffers,
the thrust-acceleration cone with its affine magnitude tie, linearized
heat-flux rows, the stage-4 burn split, and trust regions on the free coast
and final-burn durations.
"""

from dataclasses import dataclass

import numpy as np

from . import dynamics
from .collocation import mesh_for_phase
from .environment import EarthModel, ScaleSet, unscale_state
from .mission import GuidanceMode, initial_state
from .socp import NONNEG, SOC, ZERO, ConicProblem

TRUST_REGION_PHASES = (11, 12)


@dataclass(frozen=True)
class TranscriptionWeights:
    """Penalty weights and trust-region cap of one subproblem."""

    lambda_delta: float = 1e-4
    lambda_q: float = 1e4
    lambda_w: float = 1e4
    # caps on |sigma - sigma_ref| as fractions of the reference duration;
    # the long coast needs a tight cap to stay stable, while the burn-split
    # phase tolerates (and benefits from) a looser one
    delta_max_frac_coast: float = 0.01
    delta_max_frac_burn: float = 0.05

    def __post_init__(self):
        if min(self.lambda_delta, self.lambda_q, self.lambda_w) <= 0:
            raise ValueError("penalty weights must be positive")
        for frac in (self.delta_max_frac_coast, self.delta_max_frac_burn):
            if not 0.0 < frac <= 0.10:
                raise ValueError("delta_max fractions must lie in (0, 0.10]")

    def delta_max_frac(self, phase_index):
        return (self.delta_max_frac_coast if phase_index == 11
                else self.delta_max_frac_burn)


class SubproblemIndex:
    """Column layout of the subproblem decision vector.

    Per phase: 7 state components per mesh node, then (free-direction phases
    only) 4 control components (u, u_N) per collocation node, then 14 split
    virtual-control components per collocation node. Trailing scalars: the
    free-phase durations, trust radii, and split terminal buffers.
    """

    def __init__(self, plan, heat_flux_max):
        self.plan = plan
        self.heat_flux_max = heat_flux_max
        self.meshes = {p.index: mesh_for_phase(p) for p in plan}
        self.x_off, self.u_off, self.q_off = {}, {}, {}
        at = 0
        for phase in plan:
            mesh = self.meshes[phase.index]
            self.x_off[phase.index] = at
            at += 7 * mesh.n_state_nodes
            if phase.guidance is GuidanceMode.OPTIMAL:
                self.u_off[phase.index] = at
                at += 4 * mesh.n_collocation_nodes
            self.q_off[phase.index] = at
            at += 14 * mesh.n_collocation_nodes
        self.sigma_idx = {}
        for i in plan.free_indices:
            self.sigma_idx[i] = at
            at += 1
        self.delta_idx = {}
        for i in TRUST_REGION_PHASES:
            self.delta_idx[i] = at
            at += 1
        self.n_buffers = 6 if plan.has_return else 4
        self.w_plus = at
        self.w_minus = at + self.n_buffers
        self.n_vars = at + 2 * self.n_buffers

    def x(self, phase_index, node, comp):
        return self.x_off[phase_index] + 7 * node + comp

    def u(self, phase_index, node, comp):
        """comp 0..2 = acceleration, 3 = cone magnitude u_N."""
        return self.u_off[phase_index] + 4 * node + comp

    def q(self, phase_index, node, comp, negative=False):
        return self.q_off[phase_index] + 14 * node + comp + (7 if negative else 0)


@dataclass
class SubproblemSolution:
    """Decoded decision vector plus penalty-term diagnostics."""

    states: dict
    controls: dict  # phase -> (M, 3)
    u_norms: dict  # phase -> (M,) cone magnitudes u_N
    sigmas: dict
    deltas: dict
    q_l1: float
    w_l1: float
    w_terms: np.ndarray
    final_mass: float  # scaled
    objective: float


def _scaled_node_linearization(x_node, u_node, phase, t_ign, sigma_ref, vehicle,
                               earth, scales):
    """A, B-col flag, Sigma, c of one collocation node in scaled units."""
    units = scales.state_units
    x_si = unscale_state(x_node, scales)
    jac = dynamics.state_jacobian(x_si, phase, t_ign, vehicle, earth)
    a_scl = scales.tu * jac.a_mat * (units[None, :] / units[:, None])
    f_scl = scales.tu * jac.f_val / units
    if u_node is not None:
        f_scl = f_scl + dynamics.B_TILDE @ u_node
    a_mat = sigma_ref * a_scl
    c_vec = -(a_mat @ x_node)
    if u_node is not None:
        c_vec = c_vec - sigma_ref * (dynamics.B_TILDE @ u_node)
    return a_mat, f_scl, c_vec


def assemble_subproblem(ref, plan, vehicle, weights, earth=EarthModel(),
                        scales=None, heat_flux_max=900.0):
    """Build the conic subproblem linearized about `ref`.

    Returns (ConicProblem, SubproblemIndex). All quantities are scaled; the
    objective is -m(t_f) plus the trust-radius, virtual-control, and buffer
    penalties.
    """
    scales = scales or ScaleSet.from_earth(earth)
    idx = SubproblemIndex(plan, heat_flux_max)
    prob = ConicProblem(idx.n_vars)
    units = scales.state_units

    sigma12_si = ref.sigmas[12] * scales.tu
    for phase in plan:
        i = phase.index
        mesh = idx.meshes[i]
        x_ref = ref.states[i]
        u_ref = ref.controls.get(i)
        sigma_ref = ref.sigmas[i]
        free = not phase.fixed
        offset_si = plan.burn_offset(phase, sigma12_si)
        taus = mesh.collocation_taus()
        optimal = phase.guidance is GuidanceMode.OPTIMAL

        for s, grid in enumerate(mesh.grids):
            sl = mesh.state_node_slice(s)
            csl = mesh.collocation_node_slice(s)
            seg_jac = mesh.jacobian(s)
            d_mat = grid.diff_matrix
            for loc in range(grid.order):
                k = csl.start + loc
                t_ign = offset_si + sigma_ref * scales.tu * taus[k]
                u_node = u_ref[k] if optimal else None
                a_mat, sig_vec, c_vec = _scaled_node_linearization(
                    x_ref[k], u_node, phase, t_ign, sigma_ref, vehicle, earth, scales
                )
                rows = prob.new_rows(7, ZERO)
                for comp in range(7):
                    row = rows + comp
                    for j in range(grid.order + 1):
                        prob.set_entry(row, idx.x(i, sl.start + j, comp), d_mat[loc, j])
                    for c2 in range(7):
                        prob.set_entry(row, idx.x(i, k, c2), -seg_jac * a_mat[comp, c2])
                    if optimal and 3 <= comp <= 5:
                        prob.set_entry(row, idx.u(i, k, comp - 3), -seg_jac * sigma_ref)
                    prob.set_entry(row, idx.q(i, k, comp), -seg_jac)
                    prob.set_entry(row, idx.q(i, k, comp, negative=True), seg_jac)
                    if free:
                        prob.set_entry(row, idx.sigma_idx[i], -seg_jac * sig_vec[comp])
                        prob.set_rhs(row, seg_jac * c_vec[comp])
                    else:
                        prob.set_rhs(row, seg_jac * (c_vec[comp] + sig_vec[comp] * sigma_ref))

        # split virtual controls are nonnegative and L1-penalized
        n_q = 14 * mesh.n_collocation_nodes
        rows = prob.new_rows(n_q, NONNEG)
        for j in range(n_q):
            prob.set_entry(rows + j, idx.q_off[i] + j, -1.0)
            prob.add_cost(idx.q_off[i] + j, weights.lambda_q)

        if optimal:
            # thrust-acceleration cone and its affine magnitude tie
            stage_free_count = mesh.n_collocation_nodes
            for k in range(stage_free_count):
                t_ign = offset_si + sigma_ref * scales.tu * taus[k]
                x_si = unscale_state(x_ref[k], scales)
                value, d_dm, d_dr = dynamics.u_n_linear_coefficients(
                    x_si, phase, t_ign, vehicle, earth
                )
                val_s = value / scales.au
                dm_s = d_dm * scales.mu_mass / scales.au
                dr_s = d_dr * scales.du / scales.au
                row = prob.new_rows(1, ZERO)
                prob.set_entry(row, idx.u(i, k, 3), 1.0)
                prob.set_entry(row, idx.x(i, k, 6), -dm_s)
                for c2 in range(3):
                    prob.set_entry(row, idx.x(i, k, c2), -dr_s[c2])
                prob.set_rhs(row, val_s - dm_s * x_ref[k][6] - dr_s @ x_ref[k][:3])
                rows = prob.new_rows(4, SOC)
                prob.set_entry(rows, idx.u(i, k, 3), -1.0)
                for c2 in range(3):
                    prob.set_entry(rows + 1 + c2, idx.u(i, k, c2), -1.0)

        if phase.heat_flux_constrained:
            for node in range(mesh.n_state_nodes):
                x_si = unscale_state(x_ref[node], scales)
                hf = dynamics.heat_flux(x_si, earth)
                d_r = hf.d_qdot_d_r * scales.du / heat_flux_max
                d_v = hf.d_qdot_d_v * scales.vu / heat_flux_max
                row = prob.new_rows(1, NONNEG)
                for c2 in range(3):
                    prob.set_entry(row, idx.x(i, node, c2), d_r[c2])
                    prob.set_entry(row, idx.x(i, node, 3 + c2), d_v[c2])
                prob.set_rhs(
                    row,
                    1.0 - hf.qdot / heat_flux_max
                    + d_r @ x_ref[node][:3] + d_v @ x_ref[node][3:6],
                )

    _add_boundary_rows(prob, idx, ref, plan, vehicle, earth, scales)
    _add_duration_rows(prob, idx, ref, plan, weights, scales)
    _add_buffer_cost(prob, idx, weights)
    # physical objective: maximize the mass at payload release
    last_mesh = idx.meshes[12]
    prob.add_cost(idx.x(12, last_mesh.n_state_nodes - 1, 6), -1.0)
    return prob, idx


def _add_boundary_rows(prob, idx, ref, plan, vehicle, earth, scales):
    units = scales.state_units
    r0, v0 = initial_state(earth, plan.launch_site)
    x0 = np.concatenate([r0, v0]) / units[:6]
    rows = prob.new_rows(6, ZERO)
    for comp in range(6):
        prob.set_entry(rows + comp, idx.x(1, 0, comp), 1.0)
        prob.set_rhs(rows + comp, x0[comp])

    # linkage between consecutive ascent phases, with mass jettisons
    ascent = [p for p in plan if p.guidance is not GuidanceMode.RETURN]
    for prev, nxt in zip(ascent[:-1], ascent[1:]):
        last = idx.meshes[prev.index].n_state_nodes - 1
        rows = prob.new_rows(7, ZERO)
        for comp in range(7):
            prob.set_entry(rows + comp, idx.x(nxt.index, 0, comp), 1.0)
            prob.set_entry(rows + comp, idx.x(prev.index, last, comp), -1.0)
        prob.set_rhs(rows + 6, -nxt.mass_drop_before / scales.mu_mass)

    # terminal orbit rows at payload release, relaxed by buffers
    mesh12 = idx.meshes[12]
    nf = mesh12.n_state_nodes - 1
    xf = ref.states[12][nf]
    rbar, vbar = xf[:3], xf[3:6]
    a_s = plan.target.a_des / scales.du
    mu_s = earth.mu / (scales.du * scales.vu**2)
    hz_s = plan.target.h_z_des(earth) / (scales.du * scales.vu)

    def buffered_row(entries, rhs, w_slot):
        row = prob.new_rows(1, ZERO)
        for col, val in entries:
            prob.set_entry(row, col, val)
        prob.set_entry(row, idx.w_plus + w_slot, -1.0)
        prob.set_entry(row, idx.w_minus + w_slot, 1.0)
        prob.set_rhs(row, rhs)

    buffered_row(
        [(idx.x(12, nf, c), 2.0 * rbar[c]) for c in range(3)],
        a_s**2 + rbar @ rbar,
        0,
    )
    buffered_row(
        [(idx.x(12, nf, 3 + c), 2.0 * vbar[c]) for c in range(3)],
        mu_s / a_s + vbar @ vbar,
        1,
    )
    buffered_row(
        [(idx.x(12, nf, c), vbar[c]) for c in range(3)]
        + [(idx.x(12, nf, 3 + c), rbar[c]) for c in range(3)],
        rbar @ vbar,
        2,
    )
    hz_bar = rbar[0] * vbar[1] - rbar[1] * vbar[0]
    buffered_row(
        [
            (idx.x(12, nf, 0), vbar[1]),
            (idx.x(12, nf, 1), -vbar[0]),
            (idx.x(12, nf, 3), -rbar[1]),
            (idx.x(12, nf, 4), rbar[0]),
        ],
        hz_s + hz_bar,
        3,
    )

    if plan.has_return:
        # the spent stage separates at third-stage burnout with known mass
        last8 = idx.meshes[8].n_state_nodes - 1
        rows = prob.new_rows(6, ZERO)
        for comp in range(6):
            prob.set_entry(rows + comp, idx.x(13, 0, comp), 1.0)
            prob.set_entry(rows + comp, idx.x(8, last8, comp), -1.0)
        row = prob.new_rows(1, ZERO)
        prob.set_entry(row, idx.x(13, 0, 6), 1.0)
        prob.set_rhs(row, vehicle.stages[2].m_dry / scales.mu_mass)

        nr = idx.meshes[13].n_state_nodes - 1
        rbar_r = ref.states[13][nr][:3]
        re_s = earth.r_earth / scales.du
        buffered_row(
            [(idx.x(13, nr, c), 2.0 * rbar_r[c]) for c in range(3)],
            re_s**2 + rbar_r @ rbar_r,
            4,
        )
        buffered_row(
            [(idx.x(13, nr, 2), 1.0)],
            re_s * np.sin(plan.splash.latitude),
            5,
        )


def _add_duration_rows(prob, idx, ref, plan, weights, scales):
    # the stage-4 burn is split between its two firings
    row = prob.new_rows(1, ZERO)
    prob.set_entry(row, idx.sigma_idx[10], 1.0)
    prob.set_entry(row, idx.sigma_idx[12], 1.0)
    prob.set_rhs(row, plan.t_b4 / scales.tu)

    # durations stay positive
    for i in plan.free_indices:
        row = prob.new_rows(1, NONNEG)
        prob.set_entry(row, idx.sigma_idx[i], -1.0)

    for i in TRUST_REGION_PHASES:
        sigma_bar = ref.sigmas[i]
        delta_max = weights.delta_max_frac(i) * sigma_bar
        d_col, s_col = idx.delta_idx[i], idx.sigma_idx[i]
        row = prob.new_rows(1, NONNEG)  # delta - (sigma - sigma_bar) >= 0
        prob.set_entry(row, s_col, 1.0)
        prob.set_entry(row, d_col, -1.0)
        prob.set_rhs(row, sigma_bar)
        row = prob.new_rows(1, NONNEG)  # delta + (sigma - sigma_bar) >= 0
        prob.set_entry(row, s_col, -1.0)
        prob.set_entry(row, d_col, -1.0)
        prob.set_rhs(row, -sigma_bar)
        row = prob.new_rows(1, NONNEG)  # delta >= 0
        prob.set_entry(row, d_col, -1.0)
        row = prob.new_rows(1, NONNEG)  # delta <= delta_max
        prob.set_entry(row, d_col, 1.0)
        prob.set_rhs(row, delta_max)
        prob.add_cost(d_col, weights.lambda_delta)


def _add_buffer_cost(prob, idx, weights):
    for slot in range(idx.n_buffers):
        prob.add_cost(idx.w_plus + slot, weights.lambda_w)
        prob.add_cost(idx.w_minus + slot, weights.lambda_w)
        row = prob.new_rows(1, NONNEG)
        prob.set_entry(row, idx.w_plus + slot, -1.0)
        row = prob.new_rows(1, NONNEG)
        prob.set_entry(row, idx.w_minus + slot, -1.0)


def decode_solution(x, idx, objective):
    """Unpack a subproblem solution vector into per-phase arrays."""
    states, controls, u_norms, q_sum = {}, {}, {}, 0.0
    for phase in idx.plan:
        i = phase.index
        mesh = idx.meshes[i]
        n, m = mesh.n_state_nodes, mesh.n_collocation_nodes
        states[i] = x[idx.x_off[i] : idx.x_off[i] + 7 * n].reshape(n, 7)
        if i in idx.u_off:
            blk = x[idx.u_off[i] : idx.u_off[i] + 4 * m].reshape(m, 4)
            controls[i] = blk[:, :3].copy()
            u_norms[i] = blk[:, 3].copy()
        q_sum += float(np.sum(np.abs(x[idx.q_off[i] : idx.q_off[i] + 14 * m])))
    sigmas = {i: float(x[c]) for i, c in idx.sigma_idx.items()}
    deltas = {i: float(x[c]) for i, c in idx.delta_idx.items()}
    w_plus = x[idx.w_plus : idx.w_plus + idx.n_buffers]
    w_minus = x[idx.w_minus : idx.w_minus + idx.n_buffers]
    w_terms = w_plus - w_minus
    final_mesh = idx.meshes[12]
    final_mass = float(states[12][final_mesh.n_state_nodes - 1, 6])
    return SubproblemSolution(
        states=states,
        controls=controls,
        u_norms=u_norms,
        sigmas=sigmas,
        deltas=deltas,
        q_l1=q_sum,
        w_l1=float(np.sum(np.abs(w_plus)) + np.sum(np.abs(w_minus))),
        w_terms=w_terms,
        final_mass=final_mass,
        objective=objective,
    )
