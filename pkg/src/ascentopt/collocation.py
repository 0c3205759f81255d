"""Legendre-Gauss-Radau collocation: nodes, differentiation, interpolation.

Each mesh segment carries p LGR collocation points (roots of P_{p-1} + P_p,
including -1) plus the terminal point +1. Differentiation and interpolation
use the barycentric Lagrange formulas of Berrut & Trefethen (2004).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre


def lgr_nodes(p):
    """The p LGR points on [-1, 1) followed by the appended endpoint +1."""
    if not 1 <= p <= 64:
        raise ValueError("LGR order must lie in [1, 64]")
    coeffs = np.zeros(p + 1)
    coeffs[p - 1] = 1.0
    coeffs[p] = 1.0
    roots = np.sort(legendre.legroots(coeffs).real)
    dcoeffs = legendre.legder(coeffs)
    for _ in range(50):  # Newton polish to 1e-14 residual
        f = legendre.legval(roots, coeffs)
        if np.max(np.abs(f)) < 1e-14:
            break
        roots -= f / legendre.legval(roots, dcoeffs)
    roots[0] = -1.0
    return np.append(roots, 1.0)


def barycentric_weights(nodes):
    diff = np.subtract.outer(nodes, nodes)
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def barycentric_eval(nodes, weights, values, x):
    """Evaluate the Lagrange interpolant of (nodes, values) at scalar x."""
    d = x - nodes
    hit = np.nonzero(np.abs(d) < 1e-14)[0]
    if hit.size:
        return np.asarray(values)[hit[0]]
    t = weights / d
    return t @ np.asarray(values) / np.sum(t)


@dataclass(frozen=True)
class SegmentGrid:
    """Node set and differentiation matrix for one LGR segment."""

    order: int
    nodes: np.ndarray  # p+1 points, eta in [-1, 1]
    weights: np.ndarray  # barycentric weights over all p+1 nodes
    diff_matrix: np.ndarray  # p x (p+1), derivative at the collocation points

    @classmethod
    def of_order(cls, p):
        nodes = lgr_nodes(p)
        w = barycentric_weights(nodes)
        full = (w[None, :] / w[:, None]) / (np.subtract.outer(nodes, nodes) + np.eye(p + 1))
        np.fill_diagonal(full, 0.0)
        np.fill_diagonal(full, -np.sum(full, axis=1))
        return cls(order=p, nodes=nodes, weights=w, diff_matrix=full[:p, :])

    @property
    def collocation_nodes(self):
        return self.nodes[:-1]

    def control_weights(self):
        """Barycentric weights over the p collocation nodes only."""
        return barycentric_weights(self.collocation_nodes)


_GRID_CACHE = {}


def segment_grid(p):
    if p not in _GRID_CACHE:
        _GRID_CACHE[p] = SegmentGrid.of_order(p)
    return _GRID_CACHE[p]


@dataclass(frozen=True)
class PhaseMesh:
    """hp mesh over tau in [0, 1] with shared states at segment interfaces."""

    boundaries: np.ndarray  # h+1 segment boundaries
    grids: tuple  # SegmentGrid per segment

    @classmethod
    def build(cls, orders, boundaries=None):
        orders = tuple(int(p) for p in orders)
        h = len(orders)
        if boundaries is None:
            boundaries = np.linspace(0.0, 1.0, h + 1)
        boundaries = np.asarray(boundaries, dtype=float)
        if boundaries[0] != 0.0 or boundaries[-1] != 1.0 or np.any(np.diff(boundaries) <= 0):
            raise ValueError("segment boundaries must increase from 0 to 1")
        return cls(boundaries=boundaries, grids=tuple(segment_grid(p) for p in orders))

    @property
    def n_segments(self):
        return len(self.grids)

    @property
    def n_state_nodes(self):
        return sum(g.order for g in self.grids) + 1

    @property
    def n_collocation_nodes(self):
        return sum(g.order for g in self.grids)

    def segment_span(self, s):
        return self.boundaries[s], self.boundaries[s + 1]

    def eta_to_tau(self, s, eta):
        a, b = self.segment_span(s)
        return 0.5 * (b - a) * eta + 0.5 * (b + a)

    def tau_to_eta(self, s, tau):
        a, b = self.segment_span(s)
        return (2.0 * tau - (b + a)) / (b - a)

    def jacobian(self, s):
        """d tau / d eta of segment s, the factor in the collocation rows."""
        a, b = self.segment_span(s)
        return 0.5 * (b - a)

    def state_node_slice(self, s):
        """Indices of segment s's p+1 state nodes in the phase-global vector."""
        start = sum(g.order for g in self.grids[:s])
        return slice(start, start + self.grids[s].order + 1)

    def collocation_node_slice(self, s):
        start = sum(g.order for g in self.grids[:s])
        return slice(start, start + self.grids[s].order)

    def state_taus(self):
        taus = [0.0]
        for s, g in enumerate(self.grids):
            taus.extend(self.eta_to_tau(s, g.nodes[1:]))
        return np.array(taus)

    def collocation_taus(self):
        taus = []
        for s, g in enumerate(self.grids):
            taus.extend(self.eta_to_tau(s, g.collocation_nodes))
        return np.array(taus)

    def segment_of(self, tau):
        if not 0.0 <= tau <= 1.0 + 1e-12:
            raise ValueError("tau must lie in [0, 1]")
        s = int(np.searchsorted(self.boundaries, tau, side="right") - 1)
        return min(max(s, 0), self.n_segments - 1)

    def interpolate_state(self, node_values, tau):
        """Evaluate the per-segment state polynomial (all p+1 nodes)."""
        s = self.segment_of(tau)
        g = self.grids[s]
        vals = np.asarray(node_values)[self.state_node_slice(s)]
        return barycentric_eval(g.nodes, g.weights, vals, self.tau_to_eta(s, tau))

    def interpolate_control(self, colloc_values, tau):
        """Evaluate the per-segment control polynomial (p collocation nodes);
        evaluation at the segment end extrapolates the degree p-1 basis."""
        s = self.segment_of(tau)
        g = self.grids[s]
        vals = np.asarray(colloc_values)[self.collocation_node_slice(s)]
        return barycentric_eval(
            g.collocation_nodes, g.control_weights(), vals, self.tau_to_eta(s, tau)
        )


def mesh_for_phase(phase):
    return PhaseMesh.build(phase.mesh_p)
