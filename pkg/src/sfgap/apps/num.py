"""Single-path network utility maximisation.

Users pick one of K^i paths; link l has capacity c_l. Written as a
minimisation with blocks f_i(x) = -max_s x_s (throughput) or
-log max_s x_s (log utility) on the box [0, M]^{K^i}, M = max_l c_l, and
coupling constraints sum_i R^i x^i <= c.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_CAPS, DEFAULT_TOL, Caps, Tolerances, check_cap
from ..numlin import LpProblem, solve_lp
from .common import OracleValue, max_sum_log, ordered_map

UTILITIES = ("throughput", "log")


@dataclass(frozen=True)
class NumInstance:
    L: int
    N: int
    K: tuple[int, ...]
    R: tuple[np.ndarray, ...]
    c: np.ndarray
    utility: str = "throughput"
    seed: int | None = None

    def __post_init__(self):
        if self.utility not in UTILITIES:
            raise ValueError(f"utility must be one of {UTILITIES}")
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if c.size != self.L or np.any(c <= 0):
            raise ValueError("capacities must be L strictly positive numbers")
        R = tuple(np.asarray(r, dtype=float).reshape(self.L, -1) for r in self.R)
        if len(R) != self.N or tuple(r.shape[1] for r in R) != tuple(self.K):
            raise ValueError("routing matrices do not match N and K")
        if any(k < 1 for k in self.K):
            raise ValueError("every user needs at least one path")
        if list(self.K) != sorted(self.K, reverse=True):
            raise ValueError("users must be sorted by path count, descending")
        for r in R:
            if not np.all((r == 0) | (r == 1)) or np.any(r.sum(axis=0) == 0):
                raise ValueError("routing matrices must be 0/1 with nonempty columns")
            r.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "K", tuple(int(k) for k in self.K))

    @property
    def M(self) -> float:
        return float(self.c.max())

    def scaled(self, lam: float) -> "NumInstance":
        return NumInstance(self.L, self.N, self.K, self.R, lam * self.c, self.utility, self.seed)

    def to_dict(self) -> dict:
        return {"family": "num", "L": self.L, "N": self.N, "K": list(self.K),
                "R": [r.astype(int).tolist() for r in self.R], "c": self.c.tolist(),
                "utility": self.utility, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "NumInstance":
        return cls(d["L"], d["N"], tuple(d["K"]), tuple(np.array(r, float) for r in d["R"]),
                   np.array(d["c"], float), d.get("utility", "throughput"), d.get("seed"))


def build_num(seed: int, L: int, N: int, K_each, utility: str = "throughput") -> NumInstance:
    """Random instance; every path uses each link with probability 1/2 (at least one link)."""
    rng = np.random.default_rng(seed)
    Ks = [int(K_each)] * N if np.isscalar(K_each) else [int(k) for k in K_each]
    if len(Ks) != N or min(Ks) < 1:
        raise ValueError("K_each must be >= 1 for each of the N users")
    Ks = sorted(Ks, reverse=True)
    R = []
    for k in Ks:
        r = (rng.random((L, k)) < 0.5).astype(float)
        for s in range(k):
            if r[:, s].sum() == 0:
                r[rng.integers(L), s] = 1.0
        R.append(r)
    c = rng.uniform(0.5, 1.0, size=L)
    return NumInstance(L, N, tuple(Ks), tuple(R), c, utility, seed)


# -- primal --------------------------------------------------------------------

def _rates_throughput(A, cap, M, tol):
    N = A.shape[1]
    prob = LpProblem(c=-np.ones(N), A_ub=np.vstack([A, np.eye(N)]),
                     b_ub=np.concatenate([cap, np.full(N, M)]))
    sol = solve_lp(prob, tol)
    if not sol.optimal:
        return -math.inf, None
    return float(sol.x.sum()), sol.x


def _rates_log(A, cap, M):
    N = A.shape[1]
    used = A.sum(axis=1) > 0
    if np.any(cap < 0) or np.any(cap[used] <= 0):
        return -math.inf, None
    Au = A[used]
    cu = cap[used]
    load = Au.sum(axis=1)
    t0 = np.array([min(min(cu[l] / (load[l] + 1) for l in np.nonzero(Au[:, i])[0]), M / 2)
                   for i in range(N)])
    G = np.vstack([Au, np.eye(N)])
    h = np.concatenate([cu, np.full(N, M)])
    t, _ = max_sum_log(G, h, np.arange(N), t0)
    return float(np.sum(np.log(t))), t


def num_primal_exact(inst: NumInstance, z=None, tol: Tolerances = DEFAULT_TOL,
                     caps: Caps = DEFAULT_CAPS) -> OracleValue:
    """Optimal value (minimisation convention) by enumerating single-path choices.

    Concentrating each user's flow on one path loses nothing: the utility
    only sees the best path and extra paths only use capacity. The inner rate
    problem is an LP (throughput) or a log-barrier solve (log utility).
    """
    cap = inst.c if z is None else inst.c + np.asarray(z, dtype=float)
    check_cap(math.prod(inst.K), caps.assignments, "path assignments")
    choices = list(itertools.product(*[range(k) for k in inst.K]))
    M = inst.M

    def inner(assign):
        A = np.column_stack([inst.R[i][:, s] for i, s in enumerate(assign)])
        if inst.utility == "throughput":
            return _rates_throughput(A, cap, M, tol)
        return _rates_log(A, cap, M)

    results = ordered_map(inner, choices)
    best = max(range(len(choices)), key=lambda j: (results[j][0], -j))
    util, rates = results[best]
    if util == -math.inf:
        return OracleValue(math.inf, "exact", {"feasible": False})
    return OracleValue(-util, "exact", {"assignment": list(choices[best]),
                                        "rates": rates.tolist(), "utility": util})


def num_convexified_primal(inst: NumInstance, z=None, tol: Tolerances = DEFAULT_TOL) -> OracleValue:
    """Primal with each f_i replaced by its convex envelope; equals the dual optimum.

    The envelope of -max_s x_s on the box is -min(sum_s x_s, M), and of
    -log max_s x_s it is -log min(sum_s x_s, M). The returned value comes from
    a feasible point, so it is an upper estimate of d (exact for throughput).
    """
    cap = inst.c if z is None else inst.c + np.asarray(z, dtype=float)
    M = inst.M
    nx = sum(inst.K)
    nv = nx + inst.N
    rows, rhs = [], []
    Rall = np.hstack(inst.R)
    rows.append(np.hstack([Rall, np.zeros((inst.L, inst.N))]))
    rhs.append(cap)
    start = 0
    for i, k in enumerate(inst.K):
        r = np.zeros(nv)
        r[start:start + k] = -1.0
        r[nx + i] = 1.0
        rows.append(r[None, :])
        rhs.append([0.0])
        start += k
    cap_u = np.zeros((inst.N, nv))
    cap_u[np.arange(inst.N), nx + np.arange(inst.N)] = 1.0
    rows.append(cap_u)
    rhs.append(np.full(inst.N, M))
    A = np.vstack(rows)
    b = np.concatenate([np.asarray(r, float).reshape(-1) for r in rhs])
    if inst.utility == "throughput":
        c = np.zeros(nv)
        c[nx:] = -1.0
        sol = solve_lp(LpProblem(c=c, A_ub=A, b_ub=b), tol)
        if not sol.optimal:
            return OracleValue(math.inf, "exact", {"feasible": False})
        return OracleValue(float(sol.objective), "exact", {"x": sol.x.tolist()})
    if np.any(cap <= 0):
        return OracleValue(math.inf, "upper", {"feasible": False})
    load = Rall.sum(axis=1)
    eps = float(np.min(cap / (2 * load + 1)))
    v0 = np.concatenate([np.full(nx, eps), np.zeros(inst.N)])
    start = 0
    for i, k in enumerate(inst.K):
        v0[nx + i] = min(k * eps, M) / 2
        start += k
    G = np.vstack([A, -np.eye(nv)[:nx]])
    h = np.concatenate([b, np.zeros(nx)])
    v, history = max_sum_log(G, h, nx + np.arange(inst.N), v0)
    return OracleValue(-float(np.sum(np.log(v[nx:]))), "upper",
                       {"y_history": [lam[: inst.L].tolist() for lam in history]})


# -- dual ----------------------------------------------------------------------

def conjugate_throughput(w, M: float) -> np.ndarray:
    """f*(w) for f(x) = -max_s x_s on [0, M]^K, over the last axis of w."""
    w = np.asarray(w, dtype=float)
    pos = M * np.maximum(w, 0.0)
    total = pos.sum(axis=-1, keepdims=True)
    cand = total - pos + M * np.maximum(w + 1.0, 0.0)
    return cand.max(axis=-1)


def _phi(u, M):
    """sup_{0 < x <= M} u x + log x."""
    u = np.asarray(u, dtype=float)
    inner = u >= -1.0 / M
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(inner, u * M + math.log(M), -1.0 - np.log(np.where(inner, 1.0, -u)))


def conjugate_log(w, M: float) -> np.ndarray:
    """f*(w) for f(x) = -log max_s x_s on [0, M]^K minus the origin."""
    w = np.asarray(w, dtype=float)
    pos = M * np.maximum(w, 0.0)
    total = pos.sum(axis=-1, keepdims=True)
    cand = total - pos + _phi(w, M)
    return cand.max(axis=-1)


def num_dual_value(inst: NumInstance, y, z=None) -> np.ndarray:
    """q(y) = -sum_i f_i*(-R^i' y) - c'y; y may carry leading batch axes."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("dual variables must be nonnegative")
    cap = inst.c if z is None else inst.c + np.asarray(z, dtype=float)
    conj = conjugate_throughput if inst.utility == "throughput" else conjugate_log
    q = -(y @ cap)
    for r in inst.R:
        q = q - conj(-(y @ r), inst.M)
    return q


def _supergradient(inst, y, cap):
    g = -cap.copy()
    M = inst.M
    for r in inst.R:
        prices = y @ r
        s = int(np.argmin(prices))
        tau = prices[s]
        if inst.utility == "throughput":
            slope = M if tau < 1.0 else 0.0
        else:
            slope = M if tau <= 1.0 / M else 1.0 / tau
        g += slope * r[:, s]
    return g


def _dual_lp_throughput(inst, cap, tol):
    # max -M sum u_i - cap.y  s.t.  u_i >= 1 - r_s.y for every path s, u, y >= 0
    L, N = inst.L, inst.N
    rows, rhs = [], []
    for i, r in enumerate(inst.R):
        for s in range(r.shape[1]):
            row = np.zeros(L + N)
            row[:L] = -r[:, s]
            row[L + i] = -1.0
            rows.append(row)
            rhs.append(-1.0)
    c = np.concatenate([cap, np.full(N, inst.M)])
    sol = solve_lp(LpProblem(c=c, A_ub=np.array(rows), b_ub=np.array(rhs)), tol)
    return sol.x[:L] if sol.optimal else None


def num_dual_opt(inst: NumInstance, z=None, grid_points: int = 21, y_cap: float = 10.0,
                 steps: int = 500, starts: int = 5, tol: Tolerances = DEFAULT_TOL) -> OracleValue:
    """Best q(y) found; every candidate is a feasible y, so the value is a lower estimate of d.

    Coarse grid on [0, y_cap]^L, then projected supergradient ascent with
    steps h/t from the best grid points. Two extra candidates are tried: the
    exact dual LP (throughput) and the barrier multipliers of the
    convexified primal (log utility).
    """
    if inst.L > 4:
        raise ValueError("dual grid search supports L <= 4")
    cap = inst.c if z is None else inst.c + np.asarray(z, dtype=float)
    axis = np.linspace(0.0, y_cap, grid_points)
    Y = np.array(list(itertools.product(axis, repeat=inst.L)))
    q = num_dual_value(inst, Y, z)
    order = np.argsort(-q, kind="stable")[:starts]
    best_y, best_q = Y[order[0]].copy(), float(q[order[0]])
    h = y_cap / (grid_points - 1)
    for y in Y[order]:
        y = y.copy()
        for t in range(1, steps + 1):
            g = _supergradient(inst, y, cap)
            nrm = np.linalg.norm(g)
            if nrm == 0:
                break
            y = np.maximum(y + (h / t) * g / nrm, 0.0)
            val = float(num_dual_value(inst, y, z))
            if val > best_q:
                best_q, best_y = val, y.copy()
    extra = []
    if inst.utility == "throughput":
        y_lp = _dual_lp_throughput(inst, cap, tol)
        extra = [] if y_lp is None else [y_lp]
    elif np.all(cap > 0):
        extra = [np.maximum(np.array(y), 0.0)
                 for y in num_convexified_primal(inst, z, tol).meta["y_history"]]
    for y in extra:
        val = float(num_dual_value(inst, y, z))
        if val > best_q:
            best_q, best_y = val, y
    return OracleValue(best_q, "lower", {"y": best_y.tolist(), "grid_points": grid_points})
