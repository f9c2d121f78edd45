"""Dense linear algebra helpers and a two-phase tableau simplex.

The simplex always terminates at a basic feasible solution, which is what the
decomposition routines need: the support of a vertex is bounded by the number
of constraint rows. Interior-point solvers give no such guarantee.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import DEFAULT_TOL, Tolerances


class NumericBreakdown(ArithmeticError):
    """The simplex lost too much accuracy to certify its answer."""


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def as_vec(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_mat(a, ncols: int, name: str = "matrix") -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    m = np.asarray(a, dtype=float)
    if m.size == 0:
        return np.zeros((0, ncols))
    m = np.atleast_2d(m)
    if m.shape[1] != ncols:
        raise ValueError(f"{name} has {m.shape[1]} columns, expected {ncols}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class LpProblem:
    """minimize c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= lb."""

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None

    def __post_init__(self):
        c = as_vec(self.c, "c")
        n = c.size
        A_eq = as_mat(self.A_eq, n, "A_eq")
        A_ub = as_mat(self.A_ub, n, "A_ub")
        b_eq = as_vec(self.b_eq if self.b_eq is not None else [], "b_eq")
        b_ub = as_vec(self.b_ub if self.b_ub is not None else [], "b_ub")
        lb = np.zeros(n) if self.lb is None else as_vec(self.lb, "lb")
        if b_eq.size != A_eq.shape[0]:
            raise ValueError("b_eq length does not match A_eq rows")
        if b_ub.size != A_ub.shape[0]:
            raise ValueError("b_ub length does not match A_ub rows")
        if lb.size != n:
            raise ValueError("lb length does not match variable count")
        for name, val in (("c", c), ("A_eq", A_eq), ("b_eq", b_eq),
                          ("A_ub", A_ub), ("b_ub", b_ub), ("lb", lb)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def n_ub(self) -> int:
        return self.A_ub.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    basis: tuple[int, ...] = ()
    objective: float = float("nan")
    iterations: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Row-reduced tableau [A | b] with a reduced-cost row appended last."""

    def __init__(self, A, b, basis, tol: Tolerances):
        self.T = np.hstack([A, b[:, None]])
        self.basis = list(basis)
        self.tol = tol
        self.iterations = 0

    @property
    def rows(self) -> int:
        return self.T.shape[0]

    def set_objective(self, cost: np.ndarray) -> None:
        # reduced costs d = c - c_B B^{-1} A; last entry holds -objective
        obj = np.append(cost.astype(float), 0.0)
        for r, j in enumerate(self.basis):
            if obj[j] != 0.0:
                obj -= obj[j] * self.T[r]
        self.obj = obj

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        if self.obj[j] != 0.0:
            self.obj -= self.obj[j] * T[r]
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.obj[j] = 0.0
        self.basis[r] = j

    def run(self, allowed: np.ndarray, bland_after: int, hard_cap: int) -> str:
        """Pivot to optimality over the allowed columns; returns 'optimal' or 'unbounded'."""
        tol = self.tol
        while True:
            d = np.where(allowed, self.obj[:-1], 0.0)
            cand = np.nonzero(d < -tol.lp)[0]
            if cand.size == 0:
                return "optimal"
            if self.iterations >= hard_cap:
                raise NumericBreakdown(f"simplex exceeded {hard_cap} iterations")
            if self.iterations >= bland_after:
                j = int(cand[0])
            else:
                j = int(cand[np.argmin(d[cand])])
            col = self.T[:, j]
            rows = np.nonzero(col > tol.pivot)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = self.T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)
            self.iterations += 1


def solve_lp(problem: LpProblem, tol: Tolerances = DEFAULT_TOL) -> LpSolution:
    """Two-phase dense simplex returning a vertex optimum.

    Dantzig pricing switches to Bland's rule after 50*(rows+cols) pivots;
    ratio-test ties go to the lowest basic index, entering ties to the
    lowest column, so the result is deterministic.
    """
    n = problem.n_vars
    lb = problem.lb
    b_eq = problem.b_eq - problem.A_eq @ lb
    b_ub = problem.b_ub - problem.A_ub @ lb
    m_eq, m_ub = problem.n_eq, problem.n_ub
    m = m_eq + m_ub

    # structural | slack columns
    A = np.zeros((m, n + m_ub))
    A[:m_eq, :n] = problem.A_eq
    A[m_eq:, :n] = problem.A_ub
    A[m_eq:, n:] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign

    ncols = n + m_ub
    basis = [-1] * m
    for i in range(m_ub):
        if sign[m_eq + i] > 0:
            basis[m_eq + i] = n + i
    need_art = [r for r in range(m) if basis[r] < 0]
    n_art = len(need_art)
    A_full = np.hstack([A, np.zeros((m, n_art))])
    for a, r in enumerate(need_art):
        A_full[r, ncols + a] = 1.0
        basis[r] = ncols + a
    total = ncols + n_art

    tab = _Tableau(A_full, b, basis, tol)
    bland_after = 50 * (m + total)
    hard_cap = bland_after + 200 * (m + total) + 1000
    scale = 1.0 + float(np.abs(b).max(initial=0.0))

    if n_art:
        cost1 = np.zeros(total)
        cost1[ncols:] = 1.0
        tab.set_objective(cost1)
        tab.run(np.ones(total, dtype=bool), bland_after, hard_cap)
        if -tab.obj[-1] > tol.lp * scale:
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        r = 0
        while r < tab.rows:
            if tab.basis[r] >= ncols:
                row = tab.T[r, :ncols]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > tol.pivot * 1e3:
                    tab.pivot(r, j)
                else:
                    tab.T = np.delete(tab.T, r, axis=0)
                    del tab.basis[r]
                    continue
            r += 1
        tab.T = np.delete(tab.T, np.s_[ncols:total], axis=1)

    cost2 = np.zeros(ncols)
    cost2[:n] = problem.c
    tab.set_objective(cost2)
    status = tab.run(np.ones(ncols, dtype=bool), bland_after, hard_cap)
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)

    xs = _refine_basic(A, b, tab, ncols)
    x = xs[:n] + lb
    _verify(problem, x, tol)
    basis_out = tuple(sorted(tab.basis))
    return LpSolution(LpStatus.OPTIMAL, x=x, basis=basis_out,
                      objective=float(problem.c @ x), iterations=tab.iterations)


def _refine_basic(A, b, tab: _Tableau, ncols: int) -> np.ndarray:
    """Recompute basic values from the original data; nonbasics are exactly 0."""
    xs = np.zeros(ncols)
    basis = tab.basis
    from_tab = tab.T[:, -1]
    if basis:
        B = A[:, basis]
        sol, *_ = np.linalg.lstsq(B, b, rcond=None)
        if np.linalg.norm(B @ sol - b, np.inf) <= np.linalg.norm(B @ from_tab - b, np.inf) + 1e-15:
            vals = sol
        else:
            vals = from_tab
        xs[basis] = np.maximum(vals, 0.0)
    return xs


def _verify(problem: LpProblem, x: np.ndarray, tol: Tolerances) -> None:
    slack = 1e3 * tol.lp * (1.0 + float(np.abs(x).max(initial=0.0)))
    r_eq = np.abs(problem.A_eq @ x - problem.b_eq).max(initial=0.0)
    r_ub = (problem.A_ub @ x - problem.b_ub).max(initial=0.0)
    r_lb = (problem.lb - x).max(initial=0.0)
    if max(r_eq, r_ub, r_lb) > slack:
        raise NumericBreakdown(f"vertex residual {max(r_eq, r_ub, r_lb):.3e} exceeds {slack:.1e}")


def residuals(problem: LpProblem, x: np.ndarray) -> float:
    """Largest constraint violation of x."""
    r_eq = np.abs(problem.A_eq @ x - problem.b_eq).max(initial=0.0)
    r_ub = (problem.A_ub @ x - problem.b_ub).max(initial=0.0)
    r_lb = (problem.lb - x).max(initial=0.0)
    return float(max(r_eq, r_ub, r_lb, 0.0))


def affine_rank(points, tol: Tolerances = DEFAULT_TOL) -> int:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] == 0:
        raise ValueError("affine_rank of an empty point list")
    if P.shape[0] == 1:
        return 0
    D = P[1:] - P[0]
    s = np.linalg.svd(D, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol.rank * max(1.0, s[0])))


def affine_directions(points, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal rows spanning the directions of the affine hull of points."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] <= 1:
        return np.zeros((0, P.shape[1]))
    D = P[1:] - P[0]
    _, s, vt = np.linalg.svd(D, full_matrices=False)
    k = int(np.sum(s > tol.rank * max(1.0, s[0] if s.size else 0.0)))
    return vt[:k]


def orthonormal_frame(partial_basis, dim: int, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal dim x dim matrix whose leading columns span partial_basis.

    Completion greedily adds the coordinate axis with the largest residual,
    so an empty basis yields the identity.
    """
    vecs = [as_vec(v) for v in partial_basis]
    for v in vecs:
        if v.size != dim:
            raise ValueError("basis vector dimension mismatch")
    cols: list[np.ndarray] = []

    def residual(v):
        w = v.copy()
        for _ in range(2):
            for q in cols:
                w -= (q @ w) * q
        return w

    for v in vecs:
        w = residual(v)
        nrm = np.linalg.norm(w)
        if nrm <= tol.rank * max(1.0, np.linalg.norm(v)) * 1e2:
            raise ValueError("partial basis is linearly dependent")
        cols.append(w / nrm)
    eye = np.eye(dim)
    while len(cols) < dim:
        res = [residual(eye[i]) for i in range(dim)]
        norms = np.array([np.linalg.norm(r) for r in res])
        i = int(np.argmax(norms))
        cols.append(res[i] / norms[i])
    return np.column_stack(cols) if cols else np.zeros((dim, 0))
