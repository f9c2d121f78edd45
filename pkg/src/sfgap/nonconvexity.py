"""k-th nonconvexity: closed forms, grid estimators and the k-th envelope.

rho^k(f) is the largest excess f(sum a_j x_j) - sum a_j f(x_j) over convex
combinations of k points of dom f. The grid estimators below return certified
lower bounds: every reported excess is realised by an explicit k-point
combination of sample points.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .config import DEFAULT_CAPS, DEFAULT_TOL, Caps, Tolerances, check_cap
from .hulls import OutsideHull, PointSet
from .sfdecomp import decompose_epigraph


class RhoEntry(NamedTuple):
    value: float
    exact: bool


# -- closed forms --------------------------------------------------------------

def rho_k_min_box(n: int, k: int) -> RhoEntry:
    """min(x_1..x_n) on the unit box: (k-1)/k up to k = n, then (n-1)/n."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    j = min(k, n)
    return RhoEntry((j - 1) / j, True)


def rho_k_neglogmax(n: int, k: int) -> RhoEntry:
    """-log max(x_1..x_n) on x >= 0, x != 0: log min(k, n)."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    return RhoEntry(math.log(min(k, n)), True)


def rho_k_hsigma(k: int, sigma: float) -> RhoEntry:
    """Upper bound log(k / sigma) for h_sigma; rho^1 is 0 exactly."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    if k == 1:
        return RhoEntry(0.0, True)
    return RhoEntry(math.log(k / sigma), False)


def min_box(x) -> np.ndarray:
    return np.min(np.asarray(x, dtype=float), axis=-1)


def neglogmax(x) -> np.ndarray:
    mx = np.max(np.asarray(x, dtype=float), axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(mx > 0, -np.log(np.where(mx > 0, mx, 1.0)), np.inf)


def H(x, sigma: float) -> np.ndarray:
    """prod_s (|x|_1 - x_s + sigma) / (|x|_1 + sigma), over the last axis."""
    x = np.asarray(x, dtype=float)
    s1 = x.sum(axis=-1, keepdims=True)
    return np.prod((s1 - x + sigma) / (s1 + sigma), axis=-1)


def eval_h_sigma(x, sigma: float) -> np.ndarray:
    """h_sigma(x) = sum_s log((|x|_1 - x_s + sigma) / (|x|_1 + sigma))."""
    x = np.asarray(x, dtype=float)
    s1 = x.sum(axis=-1, keepdims=True)
    return np.sum(np.log(s1 - x + sigma) - np.log(s1 + sigma), axis=-1)


# -- sampled functions ---------------------------------------------------------

@dataclass(frozen=True)
class SampledFunction:
    """Samples of f on a box; +inf marks points outside dom f."""

    box_lo: np.ndarray
    box_hi: np.ndarray
    points: np.ndarray
    values: np.ndarray
    evaluator: Callable | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.box_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.box_hi, dtype=float))
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if lo.shape != hi.shape or P.shape[1] != lo.size:
            raise ValueError("box and point dimensions disagree")
        if v.size != P.shape[0]:
            raise ValueError("one value per grid point required")
        if np.any(np.isnan(v)) or np.any(v == -np.inf):
            raise ValueError("values must be finite or +inf")
        if np.any(P < lo - 1e-12) or np.any(P > hi + 1e-12):
            raise ValueError("grid points must lie in the box")
        if not np.any(np.isfinite(v)):
            raise ValueError("function has empty domain on the grid")
        for name, val in (("box_lo", lo), ("box_hi", hi), ("points", P), ("values", v)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    @classmethod
    def tabulate(cls, func: Callable, box_lo, box_hi, num, exact: bool = True,
                 label: str = "") -> "SampledFunction":
        """Tensor grid with `num` points per axis; keeps func as exact evaluator if asked."""
        lo = np.atleast_1d(np.asarray(box_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(box_hi, dtype=float))
        nums = np.broadcast_to(np.asarray(num), lo.shape)
        axes = [np.linspace(a, b, int(k)) for a, b, k in zip(lo, hi, nums)]
        P = np.array(list(itertools.product(*axes))).reshape(-1, lo.size)
        vals = np.asarray(func(P), dtype=float)
        return cls(lo, hi, P, vals, evaluator=func if exact else None, label=label)

    def evaluate(self, X) -> np.ndarray:
        """f at X: exact evaluator if present, else grid lookup (nan off-grid)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.evaluator is not None:
            return np.asarray(self.evaluator(X), dtype=float).reshape(-1)
        table = {tuple(np.round(p, 9)): v for p, v in zip(self.points, self.values)}
        return np.array([table.get(tuple(np.round(x, 9)), np.nan) for x in X])

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if v == np.inf else float(v)
        return {"dim": self.dim, "box_lo": self.box_lo.tolist(), "box_hi": self.box_hi.tolist(),
                "points": self.points.tolist(), "values": [enc(v) for v in self.values],
                "label": self.label}

    @classmethod
    def from_dict(cls, data: dict, evaluator: Callable | None = None) -> "SampledFunction":
        dec = lambda v: np.inf if v in ("inf", "+inf", "Infinity") else float(v)
        pts = np.asarray(data["points"], dtype=float).reshape(-1, int(data["dim"]))
        return cls(data["box_lo"], data["box_hi"], pts, [dec(v) for v in data["values"]],
                   evaluator=evaluator, label=data.get("label", ""))

    @classmethod
    def from_json(cls, text: str, evaluator: Callable | None = None) -> "SampledFunction":
        return cls.from_dict(json.loads(text), evaluator)


# -- grid estimators -----------------------------------------------------------

def _compositions(total: int, parts: int):
    """Tuples of `parts` positive integers summing to `total`."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        edges = (0,) + cuts + (total,)
        yield tuple(b - a for a, b in zip(edges, edges[1:]))


def _lattice_weights(j: int, weight_steps: int) -> np.ndarray:
    rows = [np.array(c, dtype=float) / weight_steps for c in _compositions(weight_steps, j)]
    rows.append(np.full(j, 1.0 / j))  # uniform weights, not always on the lattice
    return _dedupe(np.array(rows))


def _dedupe(X: np.ndarray) -> np.ndarray:
    _, idx = np.unique(np.round(X, 10), axis=0, return_index=True)
    return X[np.sort(idx)]


def _targets(f: SampledFunction, weight_steps: int, caps: Caps):
    """Points at which f is compared with its envelope, with their f values.

    Always the finite grid points; with an exact evaluator also every lattice
    combination of up to dim+1 grid points. The set does not depend on k.
    """
    F = f.points[f.finite]
    fv = f.values[f.finite]
    if f.evaluator is None:
        return F, fv
    d = f.dim
    extra = []
    count = 0
    for j in range(2, min(d + 1, F.shape[0]) + 1):
        W = _lattice_weights(j, weight_steps)
        check_cap(math.comb(F.shape[0], j), caps.subsets, "target subsets")
        for sub in itertools.combinations(range(F.shape[0]), j):
            extra.append(W @ F[list(sub)])
            count += W.shape[0]
            check_cap(count, caps.targets * 10, "envelope targets")
    if not extra:
        return F, fv
    X = _dedupe(np.vstack(extra))
    on_grid = {tuple(np.round(p, 10)) for p in F}
    X = np.array([x for x in X if tuple(np.round(x, 10)) not in on_grid]).reshape(-1, d)
    check_cap(X.shape[0], caps.targets, "envelope targets")
    fx = np.asarray(f.evaluator(X), dtype=float).reshape(-1) if X.size else np.zeros(0)
    return np.vstack([F, X]), np.concatenate([fv, fx])


def _envelope_enumerate(F, fv, targets, k, caps: Caps, tol: Tolerances) -> np.ndarray:
    """min over affinely independent <=k-subsets reproducing each target."""
    P, d = F.shape
    env = np.full(targets.shape[0], np.inf)
    check_cap(sum(math.comb(P, j) for j in range(1, min(k, P) + 1)), caps.subsets, "envelope subsets")
    rhs = np.vstack([targets.T, np.ones(targets.shape[0])])
    scale = 1.0 + float(np.abs(F).max())
    for i in range(P):
        hit = np.abs(targets - F[i]).max(axis=1) <= 1e-12 * scale
        env[hit] = np.minimum(env[hit], fv[i])
    for j in range(2, min(k, P, d + 1) + 1):
        for sub in itertools.combinations(range(P), j):
            sub = list(sub)
            M = np.vstack([F[sub].T, np.ones(j)])
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] <= tol.rank * max(1.0, sv[0]) * 1e3:
                continue  # dependent subsets are dominated by their subsets
            alpha = np.linalg.pinv(M) @ rhs
            ok = (np.abs(M @ alpha - rhs).max(axis=0) <= 1e-9 * scale) & (alpha.min(axis=0) >= -1e-12)
            if not ok.any():
                continue
            val = fv[sub] @ np.clip(alpha[:, ok], 0.0, None)
            env[ok] = np.minimum(env[ok], val)
    return env


def _envelope_lp(F, fv, targets, tol: Tolerances) -> np.ndarray:
    """Full lower convex envelope through the epigraph decomposition LP."""
    epi = PointSet(np.hstack([F, fv[:, None]]), label="epi")
    env = np.full(targets.shape[0], np.inf)
    for t, x in enumerate(targets):
        try:
            env[t] = decompose_epigraph([epi], x, tol).target[-1]
        except OutsideHull:
            pass
    return env


def _envelope(f: SampledFunction, k: int, targets, method: str, caps: Caps, tol: Tolerances):
    F = f.points[f.finite]
    fv = f.values[f.finite]
    if method == "auto":
        method = "enumerate" if k <= f.dim + 1 else "lp"
    if method == "enumerate":
        return _envelope_enumerate(F, fv, targets, k, caps, tol)
    if method == "lp":
        return _envelope_lp(F, fv, targets, tol)
    raise ValueError(f"unknown method {method!r}")


def envelope_k(f: SampledFunction, k: int, x, method: str = "auto",
               tol: Tolerances = DEFAULT_TOL, caps: Caps = DEFAULT_CAPS) -> float:
    """Discretised k-th envelope: min sum a_j f(x_j) over <=k grid points averaging to x.

    An upper approximation of the true f^(k)(x) that tightens as the grid is
    refined. For k > dim+1 (method "auto") the full envelope is computed by
    the epigraph LP; its vertex optimum uses at most dim+1 points.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != f.dim or np.any(x < f.box_lo - 1e-12) or np.any(x > f.box_hi + 1e-12):
        raise ValueError("x must lie in the domain box")
    val = _envelope(f, k, x[None, :], method, caps, tol)[0]
    if not np.isfinite(val):
        raise OutsideHull(f"x is not a combination of {k} finite grid points")
    return float(val)


@dataclass(frozen=True)
class GridEstimate:
    value: float
    target: np.ndarray | None
    f_target: float
    envelope: float


def rho_k_grid_detail(f: SampledFunction, k: int, weight_steps: int = 8, method: str = "auto",
                      tol: Tolerances = DEFAULT_TOL, caps: Caps = DEFAULT_CAPS) -> GridEstimate:
    if k < 1:
        raise ValueError("k must be >= 1")
    T, fT = _targets(f, weight_steps, caps)
    if k == 1:
        return GridEstimate(0.0, None, float("nan"), float("nan"))
    env = _envelope(f, k, T, method, caps, tol)
    gap = np.where(np.isfinite(env), fT - env, -np.inf)
    gap = np.where(np.isfinite(env) & ~np.isfinite(fT), np.inf, gap)
    t = int(np.argmax(gap))
    if gap[t] <= 0:
        return GridEstimate(0.0, None, float("nan"), float("nan"))
    return GridEstimate(float(gap[t]), T[t], float(fT[t]), float(env[t]))


def rho_k_grid(f: SampledFunction, k: int, weight_steps: int = 8, method: str = "auto",
               tol: Tolerances = DEFAULT_TOL, caps: Caps = DEFAULT_CAPS) -> float:
    """Certified lower bound on rho^k(f) from the samples.

    Compares f with the discretised k-th envelope at every grid point and,
    when f has an exact evaluator, at every lattice combination (denominator
    weight_steps, plus uniform weights) of up to dim+1 grid points.
    """
    return rho_k_grid_detail(f, k, weight_steps, method, tol, caps).value


def rho_k_lattice(f: SampledFunction, k: int, weight_steps: int = 8,
                  caps: Caps = DEFAULT_CAPS) -> float:
    """Plain enumeration: max f(sum a x) - sum a f(x) over k-subsets and lattice weights.

    Off-grid combination points are rejected unless f has an evaluator.
    Never exceeds rho_k_grid, which optimises the weights for each point.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    F = f.points[f.finite]
    fv = f.values[f.finite]
    best = 0.0
    for j in range(2, min(k, F.shape[0]) + 1):
        check_cap(math.comb(F.shape[0], j), caps.subsets, "lattice subsets")
        W = _lattice_weights(j, weight_steps)
        for sub in itertools.combinations(range(F.shape[0]), j):
            sub = list(sub)
            X = W @ F[sub]
            fx = f.evaluate(X)
            val = fx - W @ fv[sub]
            val = val[~np.isnan(val)]
            if val.size:
                best = max(best, float(val.max()))
    return best


# -- tables --------------------------------------------------------------------

@dataclass(frozen=True)
class RhoTable:
    """rho^k of each block for k = 1..m+1, with exact / upper-bound flags.

    rho_full holds rho(f_i) itself, which exceeds the last column when a
    block has more than m variables; it defaults to the last column.
    """

    values: np.ndarray
    exact: np.ndarray
    labels: tuple[str, ...] = ()
    rho_full: np.ndarray | None = None
    rho_full_exact: np.ndarray | None = None

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.values, dtype=float))
        E = np.broadcast_to(np.asarray(self.exact, dtype=bool), V.shape).copy()
        if V.shape[1] < 1 or V.shape[0] < 1:
            raise ValueError("RhoTable needs at least one block and one column")
        if not np.all(np.isfinite(V)):
            raise ValueError("RhoTable values must be finite")
        if np.any(V[:, 0] != 0):
            raise ValueError("rho^1 must be 0 for every block")
        if np.any(V < 0):
            raise ValueError("rho^k values must be nonnegative")
        if np.any(np.diff(V, axis=1) < -1e-12):
            raise ValueError("rho^k must be non-decreasing in k")
        full = V[:, -1].copy() if self.rho_full is None else np.asarray(self.rho_full, dtype=float)
        full_exact = E[:, -1].copy() if self.rho_full_exact is None else np.asarray(self.rho_full_exact, dtype=bool)
        if full.shape != (V.shape[0],) or np.any(full < V[:, -1] - 1e-12):
            raise ValueError("rho_full must dominate every column")
        labels = tuple(self.labels or ()) or tuple(f"f{i}" for i in range(V.shape[0]))
        if len(labels) != V.shape[0]:
            raise ValueError("one label per block")
        for name, val in (("values", V), ("exact", E), ("rho_full", full), ("rho_full_exact", full_exact)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1] - 1

    def to_dict(self) -> dict:
        return {"m": self.m, "labels": list(self.labels),
                "rho": self.values.tolist(), "exact": self.exact.tolist(),
                "rho_full": self.rho_full.tolist(), "rho_full_exact": self.rho_full_exact.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "RhoTable":
        rho = np.asarray(data["rho"], dtype=float)
        return cls(rho, data.get("exact", True), tuple(data.get("labels", ())),
                   data.get("rho_full"), data.get("rho_full_exact"))


def table_min_box(sizes, m: int, scale: float = 1.0) -> RhoTable:
    """Blocks scale * min-box in sizes[i] variables (the throughput NUM blocks)."""
    vals = [[scale * rho_k_min_box(n, k).value for k in range(1, m + 2)] for n in sizes]
    full = [scale * rho_k_min_box(n, n + 1).value for n in sizes]
    return RhoTable(np.array(vals), True, tuple(f"min_box[{n}]" for n in sizes), np.array(full))


def table_neglogmax(sizes, m: int) -> RhoTable:
    vals = [[rho_k_neglogmax(n, k).value for k in range(1, m + 2)] for n in sizes]
    full = [rho_k_neglogmax(n, n + 1).value for n in sizes]
    return RhoTable(np.array(vals), True, tuple(f"neglogmax[{n}]" for n in sizes), np.array(full))


def table_h_sigma(sigmas, m: int, scale: float = 1.0) -> RhoTable:
    """scale * h_sigma blocks in m variables; rho = rho^{m+1} for these."""
    entries = [[rho_k_hsigma(k, s) for k in range(1, m + 2)] for s in sigmas]
    vals = np.array([[scale * e.value for e in row] for row in entries])
    exact = np.array([[e.exact for e in row] for row in entries])
    return RhoTable(vals, exact, tuple(f"h_sigma[{s:g}]" for s in sigmas))
