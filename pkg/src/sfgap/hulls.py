"""Convex geometry of finite point sets and their Minkowski sums.

Everything here works on finite point sets. Faces of the Minkowski-sum
polytope are found through per-summand LPs on the weights beta_ij (one
variable per point of each summand); the face of the sum is the sum of the
summands' faces, so nothing larger than the summands has to be optimised.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_CAPS, DEFAULT_TOL, Caps, Tolerances, check_cap
from .numlin import (LpProblem, LpStatus, affine_directions, affine_rank,
                     as_vec, solve_lp)


class OutsideHull(ValueError):
    """Target point is not in the convex hull it was expected in."""


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.size == 0 or P.shape[0] == 0:
            raise ValueError("PointSet must be nonempty")
        if P.ndim != 2:
            raise ValueError("PointSet points must be a 2-D array")
        if not np.all(np.isfinite(P)):
            raise ValueError("PointSet points must be finite")
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class MinkowskiVertices(PointSet):
    """Distinct Minkowski sums; provenance[t] lists the index tuples summing to point t."""

    provenance: tuple = ()


@dataclass(frozen=True)
class ConvexCombination:
    support: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = as_vec(self.weights, "weights")
        sup = tuple(int(i) for i in self.support)
        if len(sup) != w.size:
            raise ValueError("support and weights differ in length")
        if len(set(sup)) != len(sup):
            raise ValueError("support indices must be distinct")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_dense(cls, weights, prune: float = DEFAULT_TOL.prune) -> "ConvexCombination":
        """Prune weights at or below `prune` and renormalise."""
        w = np.asarray(weights, dtype=float)
        keep = np.nonzero(w > prune)[0]
        if keep.size == 0:
            raise ValueError("no weight above the pruning threshold")
        kept = w[keep]
        return cls(tuple(keep.tolist()), kept / kept.sum())

    @property
    def size(self) -> int:
        return len(self.support)

    def point(self, S: PointSet) -> np.ndarray:
        return self.weights @ S.points[list(self.support)]


@dataclass(frozen=True)
class FaceDescription:
    """Minimal face of the Minkowski-sum polytope containing z.

    basis rows are orthonormal directions of the face's affine hull;
    block_support[i] lists the points of summand i lying on the face.
    """

    k: int
    vertex_indices: tuple[int, ...]
    basis: np.ndarray
    a: np.ndarray | None
    z: np.ndarray
    block_support: tuple[tuple[int, ...], ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _stack(sets: list[PointSet]):
    if not sets:
        raise ValueError("need at least one point set")
    m = sets[0].dim
    if any(s.dim != m for s in sets):
        raise ValueError("point sets differ in dimension")
    V = np.vstack([s.points for s in sets])
    block = np.concatenate([np.full(len(s), i) for i, s in enumerate(sets)])
    return V, block, m


def beta_problem(sets, z, objective=None, coord_rows=None):
    """The beta_ij LP: sum_ij beta_ij v^ij = z on the chosen rows, one simplex per block.

    coord_rows is an (r, m) matrix applied to both sides; default identity.
    """
    V, block, m = _stack(sets)
    z = as_vec(z, "z")
    if z.size != m:
        raise ValueError("target dimension mismatch")
    R = np.eye(m) if coord_rows is None else np.atleast_2d(coord_rows).reshape(-1, m)
    n = len(sets)
    simplex = np.zeros((n, V.shape[0]))
    simplex[block, np.arange(V.shape[0])] = 1.0
    A_eq = np.vstack([R @ V.T, simplex])
    b_eq = np.concatenate([R @ z, np.ones(n)])
    c = np.zeros(V.shape[0]) if objective is None else as_vec(objective)
    return LpProblem(c=c, A_eq=A_eq, b_eq=b_eq), block


def in_hull(sets, z, tol: Tolerances = DEFAULT_TOL) -> bool:
    prob, _ = beta_problem(sets, z)
    return solve_lp(prob, tol).optimal


def convk_member(S: PointSet, k: int, z, tol: Tolerances = DEFAULT_TOL,
                 caps: Caps = DEFAULT_CAPS) -> ConvexCombination | None:
    """A convex combination of at most k points of S equal to z, or None."""
    z = as_vec(z, "z")
    if not 1 <= k <= len(S):
        raise ValueError(f"k={k} outside 1..{len(S)}")
    if z.size != S.dim:
        raise ValueError("target dimension mismatch")
    check_cap(math.comb(len(S), k), caps.subsets, "k-subsets")
    if not in_hull([S], z, tol):
        return None
    for sub in itertools.combinations(range(len(S)), k):
        sub = list(sub)
        prob, _ = beta_problem([PointSet(S.points[sub])], z)
        sol = solve_lp(prob, tol)
        if sol.optimal:
            comb = ConvexCombination.from_dense(sol.x, tol.prune)
            return ConvexCombination(tuple(sub[i] for i in comb.support), comb.weights)
    return None


def caratheodory_reduce(S: PointSet, comb: ConvexCombination,
                        minimal: bool = False) -> ConvexCombination:
    """Shrink the support to at most dim+1 points, keeping the weighted sum.

    With minimal=True elimination continues while the support is affinely
    dependent, ending on an affinely independent support.
    """
    if max(comb.support, default=-1) >= len(S):
        raise ValueError("combination refers to points outside S")
    support = list(comb.support)
    alpha = comb.weights.astype(float).copy()
    m = S.dim

    def dependent(sup):
        if minimal:
            return len(sup) > affine_rank(S.points[sup]) + 1
        return len(sup) > m + 1

    if not dependent(support):
        return comb
    while dependent(support):
        P = S.points[support]
        M = np.vstack([P.T, np.ones(len(support))])
        _, _, vt = np.linalg.svd(M)
        lam = vt[-1]
        if lam.max() <= 0:
            lam = -lam
        pos = lam > 1e-14
        ratios = np.full(lam.size, np.inf)
        ratios[pos] = alpha[pos] / lam[pos]
        j = int(np.argmin(ratios))
        alpha = alpha - ratios[j] * lam
        alpha[j] = 0.0
        keep = alpha > 0
        support = [s for s, kp in zip(support, keep) if kp]
        alpha = alpha[keep]
    alpha = alpha / alpha.sum()
    return ConvexCombination(tuple(support), alpha)


def minkowski_vertices(sets: list[PointSet], tol: Tolerances = DEFAULT_TOL,
                       caps: Caps = DEFAULT_CAPS) -> MinkowskiVertices:
    """All sums of one point per set, duplicates merged, provenance kept."""
    _, _, m = _stack(sets)
    check_cap(math.prod(len(s) for s in sets), caps.minkowski, "Minkowski sums")
    sums = np.zeros((1, m))
    for s in sets:
        sums = (sums[:, None, :] + s.points[None, :, :]).reshape(-1, m)
    tuples = list(itertools.product(*[range(len(s)) for s in sets]))
    keys = np.round(sums / tol.merge)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    prov: list[list[tuple[int, ...]]] = [[] for _ in range(order.size)]
    for t, u in zip(tuples, inverse):
        prov[rank[u]].append(t)
    pts = sums[first[order]]
    label = "+".join(s.label or f"S{i}" for i, s in enumerate(sets))
    return MinkowskiVertices(pts, label=label, provenance=tuple(tuple(p) for p in prov))


def block_face_support(sets, z, tol: Tolerances = DEFAULT_TOL) -> tuple[tuple[int, ...], ...]:
    """Points of each summand that carry weight in some representation of z.

    These are exactly the points of S_i on the summand face F_i, where the
    minimal face of the sum containing z is F_1 + ... + F_n.
    """
    prob, block = beta_problem(sets, z)
    sol = solve_lp(prob, tol)
    if not sol.optimal:
        raise OutsideHull("target lies outside the convex hull of the Minkowski sum")
    positive = sol.x > tol.face
    for t in range(prob.n_vars):
        if positive[t]:
            continue
        c = np.zeros(prob.n_vars)
        c[t] = -1.0
        s = solve_lp(LpProblem(c=c, A_eq=prob.A_eq, b_eq=prob.b_eq), tol)
        positive |= s.x > tol.face
    offsets = np.concatenate([[0], np.cumsum([len(s) for s in sets])])
    return tuple(tuple(int(j) for j in np.nonzero(positive[offsets[i]:offsets[i + 1]])[0])
                 for i in range(len(sets)))


def _block_exposing(sets, support, tol: Tolerances) -> np.ndarray:
    """Smallest-L1 a with a constant on each F_i and >= that constant + 1 elsewhere."""
    m = sets[0].dim
    eq, ub = [], []
    for s, J in zip(sets, support):
        ref = s.points[J[0]]
        for j in range(len(s)):
            d = s.points[j] - ref
            (eq if j in J else ub).append(d)
    return _l1_direction(np.array(eq).reshape(-1, m), np.array(ub).reshape(-1, m), m, tol)


def _l1_direction(eq_dirs, ub_dirs, m, tol):
    # a = a+ - a-;  a.d = 0 on eq_dirs, a.d >= 1 on ub_dirs
    A_eq = np.hstack([eq_dirs, -eq_dirs]) if eq_dirs.size else None
    b_eq = np.zeros(eq_dirs.shape[0]) if eq_dirs.size else None
    A_ub = np.hstack([-ub_dirs, ub_dirs]) if ub_dirs.size else None
    b_ub = -np.ones(ub_dirs.shape[0]) if ub_dirs.size else None
    sol = solve_lp(LpProblem(c=np.ones(2 * m), A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub), tol)
    if not sol.optimal:
        raise RuntimeError("no exposing direction: face certificate is not a face")
    return sol.x[:m] - sol.x[m:]


def minimal_face(sets: list[PointSet], z, tol: Tolerances = DEFAULT_TOL,
                 caps: Caps = DEFAULT_CAPS, method: str = "blocks") -> FaceDescription:
    """Minimal face of conv(S_1 + ... + S_n) containing z.

    method="blocks" runs the max-weight LPs on the summand weights beta_ij;
    method="vertices" runs one max-alpha_t LP per Minkowski vertex p_t and is
    only practical for small sums. Both return the same face.
    """
    z = as_vec(z, "z")
    verts = minkowski_vertices(sets, tol, caps)
    if method == "blocks":
        support = block_face_support(sets, z, tol)
        on_face = [t for t, prov in enumerate(verts.provenance)
                   if all(tup[i] in support[i] for i in range(len(sets)) for tup in prov[:1])]
        diffs = [s.points[list(J)] - s.points[J[0]] for s, J in zip(sets, support)]
        D = np.vstack(diffs)
        k = affine_rank(np.vstack([np.zeros(z.size), D]), tol)
        basis = affine_directions(np.vstack([np.zeros(z.size), D]), tol)
        a = _block_exposing(sets, support, tol)
    elif method == "vertices":
        P = verts.points
        A_eq = np.vstack([P.T, np.ones(len(verts))])
        b_eq = np.append(z, 1.0)
        feas = solve_lp(LpProblem(c=np.zeros(len(verts)), A_eq=A_eq, b_eq=b_eq), tol)
        if not feas.optimal:
            raise OutsideHull("target lies outside the convex hull of the Minkowski sum")
        positive = feas.x > tol.face
        for t in range(len(verts)):
            if positive[t]:
                continue
            c = np.zeros(len(verts))
            c[t] = -1.0
            s = solve_lp(LpProblem(c=c, A_eq=A_eq, b_eq=b_eq), tol)
            positive |= s.x > tol.face
        on_face = [int(t) for t in np.nonzero(positive)[0]]
        k = affine_rank(P[on_face], tol)
        basis = affine_directions(P[on_face], tol)
        support = None
        a = None
    else:
        raise ValueError(f"unknown method {method!r}")
    face = FaceDescription(k=k, vertex_indices=tuple(on_face), basis=basis, a=a, z=z,
                           block_support=support)
    if a is None:
        face = FaceDescription(k=k, vertex_indices=face.vertex_indices, basis=basis,
                               a=exposing_direction(face, verts, tol), z=z)
    return face


def exposing_direction(face: FaceDescription, all_vertices: PointSet,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """a with a.v = a.z on face vertices and a.v >= a.z + 1 on all other vertices.

    Solved directly over the vertex list (smallest L1 norm); the block form
    used by minimal_face yields a vector satisfying the same conditions.
    """
    P = all_vertices.points
    on = np.zeros(len(all_vertices), dtype=bool)
    on[list(face.vertex_indices)] = True
    D = P - face.z
    return _l1_direction(D[on], D[~on], P.shape[1], tol)


def exposing_violation(face: FaceDescription, all_vertices: PointSet) -> float:
    """Largest violation of the two exposing conditions (0 when both hold)."""
    if face.a is None:
        raise ValueError("face has no exposing direction")
    vals = (all_vertices.points - face.z) @ face.a
    on = np.zeros(len(all_vertices), dtype=bool)
    on[list(face.vertex_indices)] = True
    eq = np.abs(vals[on]).max(initial=0.0)
    ub = (1.0 - vals[~on]).max(initial=0.0)
    return float(max(eq, ub))
