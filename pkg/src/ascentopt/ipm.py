"""Homogeneous self-dual interior-point method for SOCPs.

Primal-dual path following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step, on the self-dual embedding so that infeasibility
is certified by the embedding ray. KKT systems are solved through a sparse
factorization of the statically regularized quasi-definite matrix, with a
couple of iterative-refinement sweeps against the unregularized system.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .socp import NONNEG, SOC, ZERO, ConicSolution

_STEP_FRAC = 0.99
_MIN_DENOM = 1e-14


class _Cones:
    """Nonneg/SOC block structure over the inequality rows of the problem."""

    def __init__(self, cones):
        self.blocks = []  # (kind, start, dim) within the inequality rows
        off = 0
        for c in cones:
            if c.kind == ZERO:
                continue
            self.blocks.append((c.kind, off, c.dim))
            off += c.dim
        self.dim = off
        self.degree = sum(1 if k == SOC else d for k, _, d in self.blocks)

    def identity(self):
        e = np.zeros(self.dim)
        for kind, i, d in self.blocks:
            if kind == NONNEG:
                e[i : i + d] = 1.0
            else:
                e[i] = 1.0
        return e

    def min_eig(self, v):
        out = np.inf
        for kind, i, d in self.blocks:
            blk = v[i : i + d]
            if kind == NONNEG:
                if d:
                    out = min(out, blk.min())
            else:
                out = min(out, blk[0] - np.linalg.norm(blk[1:]))
        return out if self.blocks else np.inf

    def shift_into(self, v):
        """v + (1 + alpha) e when v is not safely interior."""
        a = self.min_eig(v)
        if a < 1e-8:
            v = v + (1.0 - a) * self.identity()
        return v

    def max_step(self, v, dv):
        """Largest alpha with v + alpha dv remaining in the cone (v interior)."""
        alpha = np.inf
        for kind, i, d in self.blocks:
            x, dx = v[i : i + d], dv[i : i + d]
            if kind == NONNEG:
                neg = dx < 0
                if np.any(neg):
                    alpha = min(alpha, np.min(-x[neg] / dx[neg]))
            else:
                # roots of |x0 + a d0|^2 - ||x1 + a d1||^2 = 0
                a2 = dx[0] ** 2 - dx[1:] @ dx[1:]
                a1 = 2.0 * (x[0] * dx[0] - x[1:] @ dx[1:])
                a0 = x[0] ** 2 - x[1:] @ x[1:]
                roots = np.roots([a2, a1, a0]) if abs(a2) > 1e-300 else (
                    [-a0 / a1] if abs(a1) > 1e-300 else []
                )
                for rt in roots:
                    if abs(np.imag(rt)) < 1e-12 and np.real(rt) > 0:
                        alpha = min(alpha, float(np.real(rt)))
                if dx[0] < 0:
                    alpha = min(alpha, -x[0] / dx[0])
        return alpha

    def product(self, u, v):
        """Jordan product u o v."""
        out = np.empty(self.dim)
        for kind, i, d in self.blocks:
            a, b = u[i : i + d], v[i : i + d]
            if kind == NONNEG:
                out[i : i + d] = a * b
            else:
                out[i] = a @ b
                out[i + 1 : i + d] = a[0] * b[1:] + b[0] * a[1:]
        return out

    def solve_arrow(self, lam, r):
        """Solve lam o d = r for d."""
        out = np.empty(self.dim)
        for kind, i, d in self.blocks:
            l, rr = lam[i : i + d], r[i : i + d]
            if kind == NONNEG:
                out[i : i + d] = rr / l
            else:
                det = l[0] ** 2 - l[1:] @ l[1:]
                d0 = (l[0] * rr[0] - l[1:] @ rr[1:]) / det
                out[i] = d0
                out[i + 1 : i + d] = (rr[1:] - d0 * l[1:]) / l[0]
        return out


class _Scaling:
    """Nesterov-Todd scaling W with lam = W z = W^{-1} s."""

    def __init__(self, cones, s, z):
        self.cones = cones
        self.w_nonneg = np.ones(cones.dim)  # diag entries where nonneg
        self.soc = {}  # start -> (eta, wbar)
        lam = np.empty(cones.dim)
        for kind, i, d in cones.blocks:
            sb, zb = s[i : i + d], z[i : i + d]
            if kind == NONNEG:
                w = np.sqrt(sb / zb)
                self.w_nonneg[i : i + d] = w
                lam[i : i + d] = np.sqrt(sb * zb)
            else:
                js = sb[0] ** 2 - sb[1:] @ sb[1:]
                jz = zb[0] ** 2 - zb[1:] @ zb[1:]
                if js <= 0 or jz <= 0:
                    raise FloatingPointError("cone iterate left the interior")
                sbar = sb / np.sqrt(js)
                zbar = zb / np.sqrt(jz)
                gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
                wbar = sbar + np.concatenate([[zbar[0]], -zbar[1:]])
                wbar /= 2.0 * gamma
                eta = (js / jz) ** 0.25
                self.soc[i] = (eta, wbar)
                lam[i : i + d] = self._soc_apply(i, d, zb, inverse=False)
        self.lam = lam

    def _soc_apply(self, i, d, v, inverse):
        eta, wbar = self.soc[i]
        w0, w1 = wbar[0], wbar[1:]
        if inverse:
            a = w0 * v[0] - w1 @ v[1:]
            head = a
            tail = v[1:] + (-v[0] + (w1 @ v[1:]) / (1.0 + w0)) * w1
            return np.concatenate([[head], tail]) / eta
        a = w0 * v[0] + w1 @ v[1:]
        head = a
        tail = v[1:] + (v[0] + (w1 @ v[1:]) / (1.0 + w0)) * w1
        return np.concatenate([[head], tail]) * eta

    def apply(self, v):
        """W v."""
        out = v * self.w_nonneg
        for kind, i, d in self.cones.blocks:
            if kind == SOC:
                out[i : i + d] = self._soc_apply(i, d, v[i : i + d], inverse=False)
        return out

    def apply_inv(self, v):
        """W^{-1} v."""
        out = v / self.w_nonneg
        for kind, i, d in self.cones.blocks:
            if kind == SOC:
                out[i : i + d] = self._soc_apply(i, d, v[i : i + d], inverse=True)
        return out

    def wsquare(self):
        """Sparse W'W = W^2 (diagonal plus dense SOC blocks)."""
        mats = []
        for kind, i, d in self.cones.blocks:
            if kind == NONNEG:
                mats.append(sp.diags(self.w_nonneg[i : i + d] ** 2))
            else:
                eta, wbar = self.soc[i]
                j = np.diag(np.concatenate([[1.0], -np.ones(d - 1)]))
                mats.append(sp.csc_matrix(eta**2 * (2.0 * np.outer(wbar, wbar) - j)))
        if not mats:
            return sp.csc_matrix((0, 0))
        return sp.block_diag(mats, format="csc")


def _ruiz_equilibrate(m_stack, cone_row_blocks, sweeps):
    """Row/column scaling toward unit max-norms; rows of one SOC block share
    a common scale so the cone geometry is preserved."""
    m = m_stack.tocsr().copy()
    nrows, ncols = m.shape
    d_r = np.ones(nrows)
    d_c = np.ones(ncols)
    for _ in range(sweeps):
        mc = m.tocsc()
        col = np.sqrt([np.max(np.abs(mc.data[mc.indptr[j] : mc.indptr[j + 1]]), initial=1.0)
                       for j in range(ncols)])
        mr = m.tocsr()
        row = np.sqrt([np.max(np.abs(mr.data[mr.indptr[i] : mr.indptr[i + 1]]), initial=1.0)
                       for i in range(nrows)])
        for start, dim in cone_row_blocks:
            row[start : start + dim] = np.max(row[start : start + dim])
        row = np.maximum(row, 1e-8)
        col = np.maximum(col, 1e-8)
        m = sp.diags(1.0 / row) @ m @ sp.diags(1.0 / col)
        d_r /= row
        d_c /= col
    return m.tocsr(), d_r, d_c


@dataclass
class _Workspace:
    a_eq: sp.csr_matrix
    g: sp.csr_matrix
    b: np.ndarray
    h: np.ndarray
    c: np.ndarray
    cones: _Cones
    reg: float
    refine: int

    def kkt(self, wsq):
        n = self.c.size
        p = self.b.size
        m = self.h.size
        blocks = [
            [self.reg * sp.eye(n), self.a_eq.T, self.g.T],
            [self.a_eq, -self.reg * sp.eye(p), None],
            [self.g, None, -(wsq + self.reg * sp.eye(m))],
        ]
        blocks0 = [
            [None, self.a_eq.T, self.g.T],
            [self.a_eq, None, None],
            [self.g, None, -wsq],
        ]
        if m == 0:
            blocks = [r[:2] for r in blocks[:2]]
            blocks0 = [r[:2] for r in blocks0[:2]]
        k = sp.bmat(blocks, format="csc")
        k0 = sp.bmat(blocks0, format="csc")
        return k, k0

    def factor(self, wsq):
        k, k0 = self.kkt(wsq)
        lu = spla.splu(k, permc_spec="COLAMD")
        refine = self.refine

        def solve3(rx, ry, rz):
            rhs = np.concatenate([rx, ry, rz])
            sol = lu.solve(rhs)
            for _ in range(refine):
                sol += lu.solve(rhs - k0 @ sol)
            n, p = self.c.size, self.b.size
            return sol[:n], sol[n : n + p], sol[n + p :]

        return solve3


def solve_ipm(problem, settings):
    try:
        return _solve_ipm(problem, settings)
    except (FloatingPointError, RuntimeError, ValueError) as exc:
        n = problem.n_vars
        m = problem.n_rows
        sol = ConicSolution(
            status="numerical_error",
            x=np.full(n, np.nan),
            y=np.full(m, np.nan),
            s=np.full(m, np.nan),
            primal_residual=np.inf,
            dual_residual=np.inf,
            gap=np.inf,
            iterations=0,
            objective=np.nan,
        )
        sol.message = str(exc)
        return sol


def _split_rows(problem):
    """Partition rows into equalities (zero cones) and inequalities."""
    eq_rows = []
    ineq_rows = []
    off = 0
    for c in problem.cones:
        idx = list(range(off, off + c.dim))
        (eq_rows if c.kind == ZERO else ineq_rows).extend(idx)
        off += c.dim
    return np.array(eq_rows, dtype=int), np.array(ineq_rows, dtype=int)


def _solve_ipm(problem, settings):
    a_full = problem.matrix()
    b_full = np.asarray(problem.b, dtype=float)
    c_orig = problem.c.copy()
    eq_idx, ineq_idx = _split_rows(problem)
    cones = _Cones(problem.cones)

    stacked = a_full[np.concatenate([eq_idx, ineq_idx])] if problem.n_rows else a_full
    cone_blocks = [(len(eq_idx) + i, d) for k, i, d in cones.blocks if k == SOC]
    m_s, d_r, d_c = _ruiz_equilibrate(stacked, cone_blocks, settings.ruiz_sweeps)

    p = len(eq_idx)
    a_eq = m_s[:p]
    g = m_s[p:]
    b = b_full[eq_idx] * d_r[:p]
    h = b_full[ineq_idx] * d_r[p:]
    c = c_orig * d_c
    c_scale = max(1.0, np.max(np.abs(c)) if c.size else 1.0)
    c = c / c_scale

    ws = _Workspace(
        a_eq=a_eq.tocsr(), g=g.tocsr(), b=b, h=h, c=c, cones=cones,
        reg=settings.static_reg, refine=settings.refine_steps,
    )
    n = c.size
    m = h.size

    # initial point from two least-squares-like KKT solves with W = I
    ident = sp.eye(m, format="csc")
    solve3 = ws.factor(ident)
    x, _, q = solve3(np.zeros(n), b, h)
    s = cones.shift_into(-(q))
    _, y, zt = solve3(-c, np.zeros(p), np.zeros(m))
    z = cones.shift_into(zt)
    tau, kappa = 1.0, 1.0

    norm_b = 1.0 + np.linalg.norm(b)
    norm_h = 1.0 + np.linalg.norm(h)
    norm_c = 1.0 + np.linalg.norm(c)
    best = None

    status = "max_iters"
    iters = 0
    for iters in range(1, settings.max_iters + 1):
        r1 = ws.a_eq.T @ y + ws.g.T @ z + c * tau
        r2 = ws.a_eq @ x - b * tau
        r3 = ws.g @ x + s - h * tau
        r4 = c @ x + b @ y + h @ z + kappa

        # convergence metrics on the de-homogenized point
        xh, yh, zh, sh = x / tau, y / tau, z / tau, s / tau
        pres = max(
            np.linalg.norm(ws.a_eq @ xh - b) / norm_b,
            np.linalg.norm(ws.g @ xh + sh - h) / norm_h,
        )
        dres = np.linalg.norm(ws.a_eq.T @ yh + ws.g.T @ zh + c) / norm_c
        pcost = c @ xh
        dcost = -(b @ yh + h @ zh)
        gap = abs(pcost - dcost) / (1.0 + max(abs(pcost), abs(dcost)))
        compl = (s @ z + tau * kappa) / max(tau, _MIN_DENOM) ** 2
        if settings.verbose:
            print(f"  ipm {iters:3d} pres {pres:8.1e} dres {dres:8.1e} "
                  f"gap {gap:8.1e} tau {tau:8.1e} kappa {kappa:8.1e}")
        metric = max(pres, dres, min(gap, abs(compl)))
        if best is None or metric < best[0]:
            best = (metric, xh.copy(), yh.copy(), zh.copy(), sh.copy(), pres, dres, gap)
        if pres <= settings.tol and dres <= settings.tol and (
            gap <= settings.tol or compl <= settings.tol
        ):
            status = "optimal"
            break
        # infeasibility certificates from the embedding ray
        by_hz = b @ y + h @ z
        if by_hz < -1e-10 and np.linalg.norm(ws.a_eq.T @ y + ws.g.T @ z) <= (
            settings.tol * max(1.0, -by_hz)
        ) and cones.min_eig(z) > -settings.tol * max(1.0, np.linalg.norm(z)):
            status = "primal_infeasible"
            break
        cx = c @ x
        if cx < -1e-10 and max(
            np.linalg.norm(ws.a_eq @ x), np.linalg.norm(ws.g @ x + s)
        ) <= settings.tol * max(1.0, -cx):
            status = "dual_infeasible"
            break

        scal = _Scaling(cones, s, z)
        lam = scal.lam
        mu = (s @ z + tau * kappa) / (cones.degree + 1)

        wsq = scal.wsquare()
        solve3 = ws.factor(wsq)
        xt, yt, zt = solve3(-c, b, h)
        ct_t = c @ xt + b @ yt + h @ zt

        def direction(sigma, comp_corr, tk_corr):
            d_s = cones.solve_arrow(
                lam, sigma * mu * cones.identity() - cones.product(lam, lam) - comp_corr
            )
            d_kappa = sigma * mu - tau * kappa - tk_corr
            one_m = 1.0 - sigma
            xr, yr, zr = solve3(-one_m * r1, -one_m * r2, -one_m * r3 - scal.apply(d_s))
            ct_r = c @ xr + b @ yr + h @ zr
            denom = kappa - tau * ct_t
            if abs(denom) < _MIN_DENOM:
                denom = np.sign(denom) * _MIN_DENOM or _MIN_DENOM
            dtau = (d_kappa + tau * one_m * r4 + tau * ct_r) / denom
            dx = xr + dtau * xt
            dy = yr + dtau * yt
            dz = zr + dtau * zt
            ds = scal.apply(d_s) - wsq @ dz
            dkap = -one_m * r4 - (c @ dx + b @ dy + h @ dz)
            return dx, dy, dz, ds, dtau, dkap

        def boundary_step(dz, ds, dtau, dkap):
            alpha = min(
                cones.max_step(lam, scal.apply(dz)),
                cones.max_step(lam, scal.apply_inv(ds)),
            )
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkap < 0:
                alpha = min(alpha, -kappa / dkap)
            return alpha

        dxa, dya, dza, dsa, dta, dka = direction(0.0, np.zeros(cones.dim), 0.0)
        alpha_aff = min(1.0, boundary_step(dza, dsa, dta, dka))
        sigma = np.clip((1.0 - alpha_aff) ** 3, 0.0, 1.0)

        corr = cones.product(scal.apply_inv(dsa), scal.apply(dza))
        dx, dy, dz, ds, dtau, dkap = direction(sigma, corr, dta * dka)
        alpha = _STEP_FRAC * boundary_step(dz, ds, dtau, dkap)
        alpha = min(alpha, 1.0)
        if not np.isfinite(alpha) or alpha <= 1e-12:
            raise FloatingPointError("step length collapsed")

        x += alpha * dx
        y += alpha * dy
        z += alpha * dz
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkap

    _, xh, yh, zh, sh, pres, dres, gap = best
    if status in ("primal_infeasible", "dual_infeasible"):
        # report the (scaled) certificate ray
        xh, yh, zh, sh = x, y, z, s

    # undo equilibration
    x_out = xh * d_c
    y_full = np.zeros(problem.n_rows)
    s_full = np.zeros(problem.n_rows)
    if p:
        y_full[eq_idx] = yh * d_r[:p]
    if m:
        y_full[ineq_idx] = zh * d_r[p:]
        s_full[ineq_idx] = sh / d_r[p:]
    y_full *= c_scale

    return ConicSolution(
        status=status,
        x=x_out,
        y=y_full,
        s=s_full,
        primal_residual=pres,
        dual_residual=dres,
        gap=gap,
        iterations=iters,
        objective=float(c_orig @ x_out),
    )
