"""Pieces shared by the application oracles."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..config import thread_count


@dataclass(frozen=True)
class OracleValue:
    """An oracle result in the minimisation convention.

    direction says how value relates to the true optimum: "exact", "upper"
    (value >= truth) or "lower" (value <= truth).
    """

    value: float
    direction: str
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"value": self.value, "direction": self.direction}


def ordered_map(fn, items):
    """map() over SFGAP_THREADS workers; results come back in input order."""
    items = list(items)
    workers = min(thread_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def max_sum_log(A: np.ndarray, b: np.ndarray, obj: np.ndarray, v0: np.ndarray,
                mu_final: float = 1e-13):
    """maximise sum_{i in obj} log v_i  s.t.  A v <= b, by a log-barrier method.

    v0 must be strictly feasible with v0[obj] > 0. Returns (v, history), where
    history holds mu / slack for each centred mu, an estimate of the optimal
    row multipliers. Late entries lose accuracy to cancellation in the slacks,
    so callers should score all of them. The objective is within
    mu_final * rows of optimal on return.
    """
    v = np.asarray(v0, dtype=float).copy()
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(A @ v >= b) or np.any(v[obj] <= 0):
        raise ValueError("starting point is not strictly feasible")
    mu = 1.0
    history = []

    def phi(x, mu):
        s = b - A @ x
        if np.any(s <= 0) or np.any(x[obj] <= 0):
            return np.inf
        return -np.sum(np.log(x[obj])) - mu * np.sum(np.log(s))

    while True:
        for _ in range(200):
            s = b - A @ v
            g = mu * (A.T @ (1.0 / s))
            g[obj] -= 1.0 / v[obj]
            Hm = mu * (A.T * (1.0 / s**2)) @ A
            Hm[obj, obj] += 1.0 / v[obj] ** 2
            try:
                step = -np.linalg.solve(Hm, g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(Hm, g, rcond=None)[0]
            dec = float(-g @ step)
            if dec / 2 <= 1e-14:
                break
            t, f0 = 1.0, phi(v, mu)
            while phi(v + t * step, mu) > f0 - 0.25 * t * dec:
                t *= 0.5
                if t < 1e-16:
                    break
            if t < 1e-16:
                break
            v = v + t * step
        history.append(mu / (b - A @ v))
        if mu <= mu_final:
            break
        mu *= 0.1
    return v, history
