"""Regenerate the frozen fixtures under tests/fixtures/v1.

NUM goldens: p from the exact enumeration oracle; d from the dual search,
accepted only when three dual grid densities agree and the convexified
primal (an upper estimate of d) closes the sandwich, both to D_TOL.
DSM goldens: grid primal and dual at three step levels.

    python3 scripts/make_golden.py [--out tests/fixtures/v1]
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from sfgap import __version__
from sfgap.apps.dsm import DsmInstance, build_dsm, dsm_dual_grid, dsm_primal_grid, dsm_primal_slack
from sfgap.apps.num import build_num, num_convexified_primal, num_dual_opt, num_primal_exact
from sfgap.apps.report import gap_report, perturbed_primal

D_TOL = 1e-6
DUAL_LEVELS = (11, 21, 41)
DSM_STEPS = (1 / 16, 1 / 32, 1 / 64)
# uniform noise keeps B(N) * N constant; budgets come from the seed and are shared across N
SWEEP_SEED, SWEEP_SIGMA, SWEEP_N = 0, 0.5, (2, 4, 8)


def num_params(n_gap: int = 12, n_flat: int = 8):
    """20 instances with N, L <= 3 and K <= 3 from a seeded candidate stream.

    Instances with zero gap make the bound check vacuous, so the first
    n_gap candidates with a positive gap are kept together with the first
    n_flat without one. Even seeds use throughput, odd seeds log utility.
    """
    gap, flat = [], []
    seed = 0
    while len(gap) < n_gap or len(flat) < n_flat:
        rng = np.random.default_rng(10_000 + seed)
        L = int(rng.integers(1, 4))
        N = int(rng.integers(2, 4))
        K = [int(k) for k in rng.integers(2, 4, size=N)]
        params = dict(seed=seed, L=L, N=N, K_each=K,
                    utility="throughput" if seed % 2 == 0 else "log")
        inst = build_num(seed, L, N, K, params["utility"])
        positive = num_primal_exact(inst).value - num_convexified_primal(inst).value > 1e-6
        bucket, cap = (gap, n_gap) if positive else (flat, n_flat)
        if len(bucket) < cap:
            bucket.append(params)
        seed += 1
    return sorted(gap + flat, key=lambda s: s["seed"])


def num_entry(params):
    inst = build_num(params["seed"], params["L"], params["N"], params["K_each"], params["utility"])
    p = num_primal_exact(inst)
    levels = {g: num_dual_opt(inst, grid_points=g).value for g in DUAL_LEVELS}
    d_hi = num_convexified_primal(inst).value
    d = levels[21]
    spread = max(levels.values()) - min(levels.values())
    sandwich = d_hi - d
    if spread > D_TOL or sandwich > D_TOL or sandwich < -1e-9:
        raise SystemExit(f"dual did not converge for {params}: spread {spread:.2e}, sandwich {sandwich:.2e}")
    rep = gap_report(inst)
    return {
        "params": params,
        "instance": inst.to_dict(),
        "p": p.value,
        "assignment": p.meta["assignment"],
        "d": d,
        "B": rep.bounds.B,
        "k_star": list(rep.bounds.k_star),
        "bound_udell": rep.bounds.bound_udell,
        "bound_classic": rep.bounds.bound_classic,
        "convergence": {"dual_grid_points": {str(g): v for g, v in levels.items()},
                        "convexified_primal": d_hi, "spread": spread, "sandwich": sandwich,
                        "tolerance": D_TOL},
    }


def dsm_entry(inst):
    levels = []
    for step in DSM_STEPS:
        pr = dsm_primal_grid(inst, step)
        du = dsm_dual_grid(inst, step)
        levels.append({"step": step, "p_grid": pr.value, "d_grid": du.value,
                       "slack_primal": dsm_primal_slack(inst, step),
                       "slack_dual": du.meta["slack_dual"], "y": du.meta["y"]})
    return {"instance": inst.to_dict(), "levels": levels}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "v1"))
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"generator": "scripts/make_golden.py", "sfgap_version": __version__, "format": 1}

    entries = [num_entry(s) for s in num_params()]
    named = build_num(7, 2, 2, 3)
    seed7 = {
        "instance": named.to_dict(),
        "p": num_primal_exact(named).value,
        "d": num_dual_opt(named).value,
        "perturbed": {"z": [0.1, 0.0], "value": perturbed_primal(named, np.array([0.1, 0.0])).value},
        "report": gap_report(named).to_dict(),
    }
    num_doc = {"meta": {**meta, "dual_levels": list(DUAL_LEVELS), "d_tol": D_TOL},
               "instances": entries, "seed7": seed7}
    (out / "num_golden.json").write_text(json.dumps(num_doc, indent=1, sort_keys=True) + "\n")

    dsm_doc = {"meta": {**meta, "steps": list(DSM_STEPS)},
               "unit": dsm_entry(DsmInstance(2, 2, np.ones(2), np.ones(2))),
               "sweep": [dsm_entry(build_dsm(SWEEP_SEED, 2, N, sigma=SWEEP_SIGMA)) for N in SWEEP_N]}
    (out / "dsm_golden.json").write_text(json.dumps(dsm_doc, indent=1, sort_keys=True) + "\n")
    for e in entries:
        gap = e["p"] - e["d"]
        print(f"num seed {e['params']['seed']:2d} {e['params']['utility']:10s} gap {gap:.6f}  B {e['B']:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
