"""End-to-end gap reports for the two application families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import RunConfig
from ..gapbounds import (BoundReport, bound_report, closed_form_dsm, closed_form_num_log,
                         closed_form_num_throughput)
from ..nonconvexity import RhoTable, table_h_sigma, table_min_box, table_neglogmax
from .common import OracleValue
from .dsm import DsmInstance, dsm_dual_grid, dsm_primal_grid, dsm_primal_slack
from .num import NumInstance, num_dual_opt, num_primal_exact

# slack granted to the near-exact NUM oracles
NUM_ORACLE_SLACK = 1e-6


def perturbed_primal(inst, z, config: RunConfig | None = None) -> OracleValue:
    """v(z): the primal value with the right-hand side b replaced by b + z (+inf if infeasible)."""
    config = config or RunConfig()
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != inst.L:
        raise ValueError(f"perturbation needs {inst.L} entries")
    if isinstance(inst, NumInstance):
        return num_primal_exact(inst, z, config.tol, config.caps)
    if isinstance(inst, DsmInstance):
        return dsm_primal_grid(inst, config.grid_step, z, config.caps)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def rho_table_for(inst) -> RhoTable:
    if isinstance(inst, NumInstance):
        if inst.utility == "throughput":
            return table_min_box(inst.K, inst.L, scale=inst.M)
        return table_neglogmax(inst.K, inst.L)
    return table_h_sigma(inst.sigma, inst.L, scale=1.0 / inst.N)


def closed_forms_for(inst) -> dict:
    if isinstance(inst, NumInstance):
        if min(inst.K) < inst.L + 1:
            return {}
        if inst.utility == "throughput":
            cf = closed_form_num_throughput(inst.N, inst.L, inst.M)
        else:
            cf = closed_form_num_log(inst.N, inst.L)
    else:
        cf = closed_form_dsm(inst.N, inst.L, float(inst.sigma.min()))
    return {"refined": cf.refined, "udell": cf.udell}


@dataclass(frozen=True)
class GapReport:
    family: str
    instance: dict
    p: OracleValue
    d: OracleValue
    bounds: BoundReport
    closed_forms: dict
    slack: float
    grid: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.p.value - self.d.value

    @property
    def verdicts(self) -> dict:
        b = self.bounds
        eps = 1e-12 * max(1.0, abs(b.bound_classic))
        return {
            "weak_duality": bool(self.gap >= -self.slack - NUM_ORACLE_SLACK),
            "gap<=B": bool(self.gap <= b.B + self.slack),
            "B<=udell": bool(b.B <= b.bound_udell + eps),
            "udell<=classic": bool(b.bound_udell <= b.bound_classic + eps),
        }

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def verdict_line(self) -> str:
        b = self.bounds
        status = "PASS" if self.ok else "FAIL"
        return (f"{status} gap={self.gap:.6g} <= B={b.B:.6g} (+slack {self.slack:.3g})"
                f" <= udell={b.bound_udell:.6g} <= classic={b.bound_classic:.6g}")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "instance": self.instance,
            "minimization": {"p": self.p.to_dict(), "d": self.d.to_dict(), "gap": self.gap},
            "maximization": {"p": -self.p.value, "d": -self.d.value, "gap": self.gap},
            "bounds": self.bounds.to_dict(),
            "closed_forms": self.closed_forms,
            "slack": self.slack,
            "grid": self.grid,
            "verdicts": self.verdicts,
            "ok": self.ok,
        }


def gap_report(inst, config: RunConfig | None = None) -> GapReport:
    """p, d, the gap estimate and all three bounds for one instance.

    NUM: p is exact and d a lower estimate, so the gap estimate can only
    overstate the true gap; slack is the oracle tolerance. DSM: both values
    come from the grid, and slack is the certified grid error of p plus d.
    """
    config = config or RunConfig()
    table = rho_table_for(inst)
    bounds = bound_report(table, inst.L)
    if isinstance(inst, NumInstance):
        p = num_primal_exact(inst, None, config.tol, config.caps)
        d = num_dual_opt(inst, None, tol=config.tol)
        return GapReport("num", inst.to_dict(), p, d, bounds, closed_forms_for(inst),
                         NUM_ORACLE_SLACK, {"dual_y": d.meta["y"]})
    if isinstance(inst, DsmInstance):
        step = config.grid_step
        p = dsm_primal_grid(inst, step, None, config.caps)
        d = dsm_dual_grid(inst, step, None, caps=config.caps)
        slack_p = dsm_primal_slack(inst, step)
        slack = slack_p + d.meta["slack_dual"]
        grid = {"step": step, "slack_primal": slack_p, "slack_dual": d.meta["slack_dual"],
                "dual_y": d.meta["y"], "d_certified_lower": d.meta["lower"],
                "gap_certified_upper": p.value - d.meta["lower"]}
        return GapReport("dsm", inst.to_dict(), p, d, bounds, closed_forms_for(inst), slack, grid)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def instance_from_dict(data: dict):
    family = data.get("family")
    if family == "num":
        return NumInstance.from_dict(data)
    if family == "dsm":
        return DsmInstance.from_dict(data)
    raise ValueError(f"unknown instance family {family!r}")


def finite_or_str(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
