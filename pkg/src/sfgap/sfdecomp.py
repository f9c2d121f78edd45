"""Constructive Shapley-Folkman decompositions.

Each routine solves one LP over the weights beta_ij (block i, point j) and
reads the decomposition off a vertex optimum. A vertex has at most as many
nonzeros as there are equality rows, which is where every cardinality budget
below comes from:

    plain      m coordinate rows + n simplex rows    sum k_i <= m + n
    refined    k face rows + n simplex rows          sum k_i <= k + n
    epigraph   m - 1 rows + n simplex rows           sum k_i <= m - 1 + n
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .hulls import (ConvexCombination, FaceDescription, OutsideHull, PointSet,
                    beta_problem)
from .numlin import LpProblem, as_vec, orthonormal_frame, solve_lp


class DecompositionError(RuntimeError):
    """The decomposition failed its post-verification."""


@dataclass(frozen=True)
class SFDecomposition:
    combinations: tuple[ConvexCombination, ...]
    parts: np.ndarray            # row i is z^i
    target: np.ndarray
    face_dim: int                # k used for the budget
    budget: int                  # the bound sum k_i must respect
    kind: str
    residual: float
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.combinations)

    @property
    def total(self) -> int:
        return sum(self.k)

    @property
    def n_nontrivial(self) -> int:
        return sum(1 for k in self.k if k >= 2)

    def within_budget(self) -> bool:
        cap = self.face_dim + 1
        return self.total <= self.budget and all(1 <= k <= cap for k in self.k)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target": self.target.tolist(),
            "face_dim": self.face_dim,
            "budget": self.budget,
            "k": list(self.k),
            "total": self.total,
            "residual": self.residual,
            "blocks": [
                {"support": list(c.support), "weights": c.weights.tolist(), "point": p.tolist()}
                for c, p in zip(self.combinations, self.parts)
            ],
        }


def _read_vertex(sets, x, prune):
    combos, parts = [], []
    start = 0
    for s in sets:
        w = x[start:start + len(s)]
        start += len(s)
        comb = ConvexCombination.from_dense(w, prune)
        combos.append(comb)
        parts.append(comb.point(s))
    return tuple(combos), np.array(parts)


def decompose_plain(sets: list[PointSet], z, tol: Tolerances = DEFAULT_TOL) -> SFDecomposition:
    """z = sum z^i with sum k_i <= m + n, so at most m blocks use 2+ points."""
    z = as_vec(z, "z")
    prob, _ = beta_problem(sets, z)
    sol = solve_lp(prob, tol)
    if not sol.optimal:
        raise OutsideHull("target lies outside the convex hull of the Minkowski sum")
    combos, parts = _read_vertex(sets, sol.x, tol.prune)
    m = z.size
    res = float(np.abs(parts.sum(axis=0) - z).max())
    return SFDecomposition(combos, parts, z, face_dim=m, budget=m + len(sets),
                           kind="plain", residual=res)


def decompose_refined(sets: list[PointSet], z, face: FaceDescription,
                      tol: Tolerances = DEFAULT_TOL) -> SFDecomposition:
    """Decomposition with sum k_i <= k + n for z on a k-dimensional face.

    Coordinates are rotated so the face directions come first; only those k
    rows are imposed, and minimising a.(sum beta v) pins the optimum to the
    face, which makes the other m - k coordinates agree as well. That last
    step is re-checked numerically.
    """
    z = as_vec(z, "z")
    m = z.size
    k = int(face.k)
    if face.a is None:
        raise ValueError("face certificate needs an exposing direction")
    Q = orthonormal_frame(list(face.basis), m, tol)
    rows = Q[:, :k].T
    V = np.vstack([s.points for s in sets])
    objective = V @ face.a
    prob, _ = beta_problem(sets, z, objective=objective, coord_rows=rows)
    sol = solve_lp(prob, tol)
    if not sol.optimal:
        raise DecompositionError(f"refined LP is {sol.status.value}; certificate does not match z")
    combos, parts = _read_vertex(sets, sol.x, tol.prune)
    res = float(np.abs(parts.sum(axis=0) - z).max())
    scale = 1.0 + float(np.abs(V).max())
    if res > 1e2 * tol.lp * scale * len(sets):
        raise DecompositionError(f"refined decomposition misses z by {res:.3e}")
    return SFDecomposition(combos, parts, z, face_dim=k, budget=k + len(sets),
                           kind="refined", residual=res,
                           extra={"objective": sol.objective, "a_dot_z": float(face.a @ z)})


def decompose_epigraph(sets: list[PointSet], z_prefix, tol: Tolerances = DEFAULT_TOL) -> SFDecomposition:
    """Match the first m - 1 coordinates, minimise the summed last one.

    Returns sum k_i <= m - 1 + n and each k_i <= m. The target recorded is
    (z_prefix, smallest attainable last coordinate).
    """
    zp = as_vec(z_prefix, "z_prefix")
    m = sets[0].dim
    if zp.size != m - 1:
        raise ValueError(f"prefix has length {zp.size}, expected {m - 1}")
    V = np.vstack([s.points for s in sets])
    rows = np.eye(m)[: m - 1]
    full = np.append(zp, 0.0)
    prob, _ = beta_problem(sets, full, objective=V[:, -1], coord_rows=rows)
    sol = solve_lp(prob, tol)
    if not sol.optimal:
        raise OutsideHull("no hull point has the requested leading coordinates")
    combos, parts = _read_vertex(sets, sol.x, tol.prune)
    total = parts.sum(axis=0)
    target = np.append(zp, total[-1])
    res = float(np.abs(total[:-1] - zp).max(initial=0.0))
    return SFDecomposition(combos, parts, target, face_dim=m - 1, budget=m - 1 + len(sets),
                           kind="epigraph", residual=res, extra={"min_last": float(sol.objective)})
