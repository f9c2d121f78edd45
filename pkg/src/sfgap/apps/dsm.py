"""Dynamic spectrum management on N tones shared by L users.

Block i is tone i with the sum of the users' negated rates,
f_i(x) = (1/N) h_{sigma_i}(x) on [0, 1]^L, and user l has the power budget
sum_i x^i_l <= p_l. Both oracles work on the grid {0, step, ..., 1}^L per tone.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_CAPS, Caps, check_cap
from ..nonconvexity import eval_h_sigma
from .common import OracleValue


@dataclass(frozen=True)
class DsmInstance:
    L: int
    N: int
    sigma: np.ndarray
    p: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float).reshape(-1)
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if sigma.size != self.N or np.any(sigma <= 0) or np.any(sigma > 1):
            raise ValueError("need N noise levels in (0, 1]")
        if p.size != self.L or np.any(p <= 0) or np.any(p > 1):
            raise ValueError("need L power budgets in (0, 1]")
        sigma.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "p", p)

    def block_value(self, i: int, x) -> np.ndarray:
        return eval_h_sigma(x, float(self.sigma[i])) / self.N

    def lipschitz(self) -> np.ndarray:
        """Per-tone bound on every partial derivative of f_i."""
        return self.L / (self.N * self.sigma)

    def to_dict(self) -> dict:
        return {"family": "dsm", "L": self.L, "N": self.N, "sigma": self.sigma.tolist(),
                "p": self.p.tolist(), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "DsmInstance":
        return cls(d["L"], d["N"], np.array(d["sigma"], float), np.array(d["p"], float), d.get("seed"))


def build_dsm(seed: int, L: int, N: int, sigma=None, p=None) -> DsmInstance:
    """Random instance; sigma ~ U[0.3, 1] and p ~ U[0.5, 1] unless given (scalar or array)."""
    rng = np.random.default_rng(seed)
    sig = rng.uniform(0.3, 1.0, size=N) if sigma is None else np.broadcast_to(np.asarray(sigma, float), (N,))
    bud = rng.uniform(0.5, 1.0, size=L) if p is None else np.broadcast_to(np.asarray(p, float), (L,))
    return DsmInstance(L, N, np.array(sig), np.array(bud), seed)


def _units(step: float) -> int:
    U = round(1.0 / step)
    if U < 1 or abs(U * step - 1.0) > 1e-12:
        raise ValueError("1/step must be a positive integer")
    return U


def tone_grid(L: int, step: float, caps: Caps = DEFAULT_CAPS) -> np.ndarray:
    """Integer unit vectors of {0..U}^L in lexicographic order."""
    U = _units(step)
    check_cap((U + 1) ** L, caps.tone_grid, "per-tone grid points")
    return np.array(list(itertools.product(range(U + 1), repeat=L)), dtype=int)


def dsm_primal_grid(inst: DsmInstance, step: float, z=None, caps: Caps = DEFAULT_CAPS) -> OracleValue:
    """Exact optimum over grid allocations; an upper estimate of p.

    Dynamic programming over tones with the state being the units of power
    used so far per user.
    """
    U = _units(step)
    G = tone_grid(inst.L, step, caps)
    budget = inst.p if z is None else inst.p + np.asarray(z, dtype=float)
    if np.any(budget < 0):
        return OracleValue(math.inf, "upper", {"feasible": False})
    B = np.minimum(np.floor(budget / step + 1e-9).astype(int), inst.N * U)
    shape = tuple(int(b) + 1 for b in B)
    check_cap(math.prod(shape), caps.tone_grid * 10, "budget states")
    V = np.full(shape, np.inf)
    V[(0,) * inst.L] = 0.0
    back = []
    for i in range(inst.N):
        fv = inst.block_value(i, G * step)
        new = np.full(shape, np.inf)
        arg = np.full(shape, -1, dtype=int)
        for g, (u, val) in enumerate(zip(G, fv)):
            if np.any(u > B):
                continue
            src = tuple(slice(0, b + 1 - a) for a, b in zip(u, B))
            dst = tuple(slice(a, b + 1) for a, b in zip(u, B))
            cand = V[src] + val
            better = cand < new[dst]
            new[dst] = np.where(better, cand, new[dst])
            arg[dst] = np.where(better, g, arg[dst])
        V = new
        back.append(arg)
    flat = int(np.argmin(V))
    state = np.array(np.unravel_index(flat, shape))
    value = float(V.flat[flat])
    alloc = np.zeros((inst.N, inst.L), dtype=int)
    for i in range(inst.N - 1, -1, -1):
        g = back[i][tuple(state)]
        alloc[i] = G[g]
        state = state - G[g]
    x = alloc * step
    return OracleValue(value, "upper", {"x": x.tolist(), "step": step})


def dsm_dual_value_grid(inst: DsmInstance, Y, step: float, z=None, caps: Caps = DEFAULT_CAPS) -> np.ndarray:
    """q_grid(y) = sum_i min_{g in grid} [f_i(g) + y.g] - y.p, batched over rows of Y."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    budget = inst.p if z is None else inst.p + np.asarray(z, dtype=float)
    X = tone_grid(inst.L, step, caps) * step
    lin = Y @ X.T
    q = -(Y @ budget)
    for i in range(inst.N):
        q = q + np.min(lin + inst.block_value(i, X)[None, :], axis=1)
    return q


def dsm_dual_grid(inst: DsmInstance, step: float, z=None, coarse: int = 21, rounds: int = 40,
                  caps: Caps = DEFAULT_CAPS) -> OracleValue:
    """Approximate max of q_grid over y >= 0.

    q_grid minimises over a finite grid, so it overestimates q and the result
    is not a certified lower bound on d. meta["slack_dual"] bounds
    q_grid(y*) - q(y*) from the Lipschitz constants, and meta["lower"] is the
    certified value q_grid(y*) - slack_dual.
    """
    y_cap = 1.05 * float(inst.lipschitz().max()) + 1e-9
    axis = np.linspace(0.0, y_cap, coarse)
    Y = np.array(list(itertools.product(axis, repeat=inst.L)))
    q = dsm_dual_value_grid(inst, Y, step, z, caps)
    j = int(np.argmax(q))
    best_y, best_q = Y[j].copy(), float(q[j])
    h = y_cap / (coarse - 1)
    offsets = np.array(list(itertools.product((-1.0, -0.5, 0.0, 0.5, 1.0), repeat=inst.L)))
    for _ in range(rounds):
        Y = np.maximum(best_y + h * offsets, 0.0)
        q = dsm_dual_value_grid(inst, Y, step, z, caps)
        j = int(np.argmax(q))
        if q[j] > best_q:
            best_y, best_q = Y[j].copy(), float(q[j])
        else:
            h *= 0.5
    slack_d = float(np.sum(inst.L * inst.lipschitz() + np.abs(best_y).sum()) * step / 2)
    return OracleValue(best_q, "grid", {"y": best_y.tolist(), "slack_dual": slack_d,
                                         "lower": best_q - slack_d, "step": step})


def dsm_primal_slack(inst: DsmInstance, step: float) -> float:
    """Bound on (grid primal) - p: rounding every allocation down moves f_i by <= L * Lip_i * step."""
    return float(np.sum(inst.L * inst.lipschitz()) * step)
