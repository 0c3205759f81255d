"""Standard-form cone program container, validation, and solver front end.

Problems are stored as
    min c'x  s.t.  A x + s = b,  s in K,
where K is an ordered product of zero cones (equalities), nonnegative
cones, and second-order cones. The built-in interior-point solver lives in
:mod:`ascentopt.ipm`; alternative backends can be registered by name.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

ZERO = "zero"
NONNEG = "nonneg"
SOC = "soc"


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in (ZERO, NONNEG, SOC):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.dim <= 0 or (self.kind == SOC and self.dim < 2):
            raise ValueError(f"invalid {self.kind} cone dimension {self.dim}")


class ConicProblem:
    """Sparse conic problem assembled from COO triplets."""

    def __init__(self, n_vars, var_names=None):
        self.n_vars = n_vars
        self.c = np.zeros(n_vars)
        self.rows = []
        self.cols = []
        self.vals = []
        self.b = []
        self.cones = []
        self.var_names = var_names

    @property
    def n_rows(self):
        return len(self.b)

    def add_cost(self, col, coeff):
        self.c[col] += coeff

    def new_rows(self, count, kind):
        """Append a cone block of `count` fresh rows; returns the row offset."""
        start = len(self.b)
        self.b.extend([0.0] * count)
        self.cones.append(Cone(kind, count))
        return start

    def set_entry(self, row, col, val):
        if val != 0.0:
            self.rows.append(row)
            self.cols.append(col)
            self.vals.append(val)

    def set_rhs(self, row, val):
        self.b[row] = val

    def matrix(self):
        """Row-compressed constraint matrix; duplicate triplets are summed."""
        a = sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_vars)
        )
        return a.tocsr()

    def has_duplicates(self):
        seen = set()
        for i, j in zip(self.rows, self.cols):
            if (i, j) in seen:
                return True
            seen.add((i, j))
        return False

    def _name(self, col):
        if self.var_names and col in self.var_names:
            return self.var_names[col]
        return f"x[{col}]"

    def validate(self):
        """Structured defect report; an empty list means the problem is ok."""
        defects = []
        total = sum(c.dim for c in self.cones)
        if total != self.n_rows:
            defects.append(f"cone dims sum to {total}, expected {self.n_rows} rows")
        bad_c = np.nonzero(~np.isfinite(self.c))[0]
        for j in bad_c:
            defects.append(f"non-finite cost entry at {self._name(j)}")
        for i, j, v in zip(self.rows, self.cols, self.vals):
            if not np.isfinite(v):
                defects.append(f"non-finite matrix entry at row {i}, {self._name(j)}")
        b = np.asarray(self.b)
        for i in np.nonzero(~np.isfinite(b))[0]:
            defects.append(f"non-finite rhs entry at row {i}")
        if self.rows:
            if max(self.rows) >= self.n_rows or max(self.cols) >= self.n_vars:
                defects.append("triplet index out of range")
        if self.has_duplicates():
            defects.append("duplicate triplets (coalesced by summation)")
        return defects

    def dump(self, path):
        """Plain-text sparse exchange format: banner, dims, cones, COO
        triplets, then dense b and c."""
        a = self.matrix().tocoo()
        with open(path, "w") as f:
            f.write("ascentopt-conic-v1\n")
            f.write(f"{self.n_rows} {self.n_vars} {a.nnz}\n")
            f.write(" ".join(f"{c.kind}:{c.dim}" for c in self.cones) + "\n")
            for i, j, v in zip(a.row, a.col, a.data):
                f.write(f"{i} {j} {v:.17g}\n")
            f.write(" ".join(f"{v:.17g}" for v in self.b) + "\n")
            f.write(" ".join(f"{v:.17g}" for v in self.c) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            banner = f.readline().strip()
            if banner != "ascentopt-conic-v1":
                raise ValueError(f"unrecognized banner {banner!r}")
            m, n, nnz = (int(t) for t in f.readline().split())
            prob = cls(n)
            for tok in f.readline().split():
                kind, dim = tok.split(":")
                prob.new_rows(int(dim), kind)
            for _ in range(nnz):
                i, j, v = f.readline().split()
                prob.set_entry(int(i), int(j), float(v))
            b = [float(t) for t in f.readline().split()]
            for i, v in enumerate(b):
                prob.set_rhs(i, v)
            prob.c[:] = [float(t) for t in f.readline().split()]
        return prob


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-9
    max_iters: int = 200
    static_reg: float = 1e-9
    refine_steps: int = 2
    ruiz_sweeps: int = 10
    verbose: bool = False


@dataclass
class ConicSolution:
    status: str  # optimal | primal_infeasible | dual_infeasible | max_iters | numerical_error
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    objective: float


def solve(problem, settings=SolverSettings(), backend="builtin"):
    """Solve a validated conic problem with the selected backend."""
    defects = [d for d in problem.validate() if not d.startswith("duplicate")]
    if defects:
        raise ValueError("invalid conic problem: " + "; ".join(defects))
    return _BACKENDS[backend](problem, settings)


def register_backend(name, fn):
    _BACKENDS[name] = fn


def _builtin(problem, settings):
    from .ipm import solve_ipm

    return solve_ipm(problem, settings)


_BACKENDS = {"builtin": _builtin}
