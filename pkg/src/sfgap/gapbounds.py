"""Duality-gap bounds for separable problems min sum f_i(x_i) s.t. sum A_i x_i <= b.

With m coupling constraints and n blocks the refined bound is

    B = max sum_i rho^{k_i}(f_i)  over integers 1 <= k_i <= m+1, sum k_i <= m+n,

solved exactly here by dynamic programming over the extra units k_i - 1.
The two older bounds and the closed forms for the network and spectrum
applications sit alongside it for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .nonconvexity import RhoTable


@dataclass(frozen=True)
class BoundReport:
    B: float
    k_star: tuple[int, ...]
    bound_udell: float
    bound_classic: float
    B_exact: bool
    udell_exact: bool
    classic_exact: bool
    m: int
    n: int
    extra: dict = field(default_factory=dict)

    @property
    def ordered(self) -> bool:
        eps = 1e-12 * max(1.0, abs(self.bound_classic))
        return self.B <= self.bound_udell + eps and self.bound_udell <= self.bound_classic + eps

    def to_dict(self) -> dict:
        return {
            "m": self.m, "n": self.n,
            "B": self.B, "k_star": list(self.k_star),
            "bound_udell": self.bound_udell, "bound_classic": self.bound_classic,
            "flags": {"B": _flag(self.B_exact), "udell": _flag(self.udell_exact),
                      "classic": _flag(self.classic_exact)},
            "ordering": {"B<=udell<=classic": self.ordered},
            **self.extra,
        }


def _flag(exact: bool) -> str:
    return "exact" if exact else "upper_bound"


def solve_allocation(table: RhoTable, m: int | None = None) -> tuple[float, tuple[int, ...]]:
    """Exact optimum of the worst-case allocation problem and a maximiser.

    best[i][r] is the best value of blocks i..n-1 when r extra units remain.
    Reconstruction walks forward taking the smallest k_i that attains the
    optimum, so earlier blocks get the smaller k on ties.
    """
    m = table.m if m is None else int(m)
    if m < 0 or table.values.shape[1] < m + 1:
        raise ValueError(f"table has {table.values.shape[1]} columns, need {m + 1}")
    rho = table.values[:, : m + 1]
    n = rho.shape[0]
    best = np.zeros((n + 1, m + 1))
    for i in range(n - 1, -1, -1):
        for r in range(m + 1):
            best[i, r] = max(rho[i, e] + best[i + 1, r - e] for e in range(r + 1))
    ks = []
    r = m
    for i in range(n):
        for e in range(r + 1):
            if rho[i, e] + best[i + 1, r - e] == best[i, r]:
                ks.append(e + 1)
                r -= e
                break
    value = sum(float(rho[i, k - 1]) for i, k in enumerate(ks))
    return value, tuple(ks)


def bound_classic(rhos, m: int) -> float:
    """min{m+1, n} * max_i rho(f_i)."""
    rhos = np.asarray(rhos, dtype=float).reshape(-1)
    if rhos.size == 0:
        raise ValueError("empty rho list")
    return float(min(m + 1, rhos.size) * rhos.max())


def bound_udell(rhos, m: int) -> float:
    """Sum of the min{m, n} largest rho(f_i)."""
    rhos = np.asarray(rhos, dtype=float).reshape(-1)
    if rhos.size == 0:
        raise ValueError("empty rho list")
    top = np.sort(rhos)[::-1][: min(m, rhos.size)]
    return float(sum(float(v) for v in top))


def bound_report(table: RhoTable, m: int | None = None) -> BoundReport:
    m = table.m if m is None else int(m)
    B, ks = solve_allocation(table, m)
    B_exact = bool(all(table.exact[i, k - 1] for i, k in enumerate(ks)))
    order = np.argsort(-table.rho_full, kind="stable")[: min(m, table.n)]
    return BoundReport(
        B=B, k_star=ks,
        bound_udell=bound_udell(table.rho_full, m),
        bound_classic=bound_classic(table.rho_full, m),
        B_exact=B_exact,
        udell_exact=bool(all(table.rho_full_exact[order])),
        classic_exact=bool(table.rho_full_exact[int(np.argmax(table.rho_full))]),
        m=m, n=table.n,
    )


class ClosedForm(NamedTuple):
    refined: float   # from the allocation problem
    udell: float     # the comparison value derived from the older bound


def _check_pos(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive")


def closed_form_num_throughput(N: int, L: int, c_max: float) -> ClosedForm:
    """Single-path throughput NUM, every user with at least L+1 paths."""
    _check_pos(N=N, L=L, c_max=c_max)
    q = min(N, L)
    return ClosedForm(q * L / (L + q) * c_max, q * L / (L + 1) * c_max)


def closed_form_num_log(N: int, L: int) -> ClosedForm:
    """Single-path log-utility NUM, every user with at least L+1 paths."""
    _check_pos(N=N, L=L)
    q = min(N, L)
    return ClosedForm(q * math.log(1 + L / q), q * math.log(L + 1))


def closed_form_dsm(N: int, L: int, sigma_min: float) -> ClosedForm:
    """Spectrum management with N tones, L users and smallest noise sigma_min."""
    _check_pos(N=N, L=L, sigma_min=sigma_min)
    if sigma_min > 1:
        raise ValueError("noises must be scaled to at most 1")
    q = min(N, L)
    return ClosedForm(q / N * math.log((1 + L / q) / sigma_min),
                      q / N * math.log((L + 1) / sigma_min))
