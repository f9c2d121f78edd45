"""Command-line entry point: decompose, rho, bound and demo.

Exit codes: 0 ok, 1 bad input, 2 infeasible target, 3 cap exceeded,
4 a reported verdict failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import CapExceeded, RunConfig
from .gapbounds import bound_report
from .hulls import OutsideHull, PointSet, minimal_face
from .nonconvexity import (RhoTable, SampledFunction, rho_k_grid, table_h_sigma,
                           table_min_box, table_neglogmax)
from .sfdecomp import DecompositionError, decompose_epigraph, decompose_plain, decompose_refined

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CAP, EXIT_VERDICT = 0, 1, 2, 3, 4


class InputError(ValueError):
    """Malformed command input."""


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _emit(payload: dict, fmt: str, rows: list[dict] | None = None, lines: list[str] | None = None,
          stream=None) -> None:
    stream = stream or sys.stdout
    payload = _jsonable(payload)
    if fmt == "json":
        stream.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    elif fmt == "csv":
        buf = io.StringIO()
        if rows:
            rows = _jsonable(rows)
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        else:
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["key", "value"])
            for k, v in _flatten(payload):
                writer.writerow([k, json.dumps(v) if isinstance(v, list) else v])
        stream.write(buf.getvalue())
    else:
        for line in lines or [f"{k}: {v}" for k, v in _flatten(payload)]:
            stream.write(line + "\n")


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


# -- subcommands ---------------------------------------------------------------

def cmd_decompose(args, cfg: RunConfig):
    data = _read_json(args.input)
    try:
        sets = [PointSet(np.asarray(s, dtype=float)) for s in data["sets"]]
        z = np.asarray(data["z"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"decompose input needs 'sets' and 'z': {exc}") from exc
    if args.epigraph:
        dec = decompose_epigraph(sets, z, cfg.tol)
        face = None
    elif args.refined:
        face = minimal_face(sets, z, cfg.tol, cfg.caps)
        dec = decompose_refined(sets, z, face, cfg.tol)
    else:
        dec = decompose_plain(sets, z, cfg.tol)
        face = None
    result = dec.to_dict()
    result["within_budget"] = dec.within_budget()
    if face is not None:
        result["face"] = {"k": face.k, "a": face.a}
    lines = [f"{dec.kind} decomposition: k = {list(dec.k)}, sum = {dec.total} <= budget {dec.budget}"
             f" (face dim {dec.face_dim}), residual {dec.residual:.3e}"]
    for i, (c, p) in enumerate(zip(dec.combinations, dec.parts)):
        lines.append(f"  block {i}: support {list(c.support)} weights {np.round(c.weights, 12).tolist()}"
                     f" point {p.tolist()}")
    code = EXIT_OK if dec.within_budget() else EXIT_VERDICT
    return result, None, lines, code


def cmd_rho(args, cfg: RunConfig):
    kmax = args.kmax
    if kmax < 1:
        raise InputError("--kmax must be >= 1")
    m = kmax - 1
    direction = "upper"
    if args.family == "min_box":
        table = table_min_box(args.n or [2], m)
    elif args.family == "neglogmax":
        table = table_neglogmax(args.n or [2], m)
    elif args.family == "h_sigma":
        table = table_h_sigma(args.sigma or [1.0], m)
    elif args.family == "sampled":
        if not args.file:
            raise InputError("family 'sampled' needs --file")
        try:
            f = SampledFunction.from_dict(_read_json(args.file))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad sampled function: {exc}") from exc
        vals = [rho_k_grid(f, k, cfg.weight_steps, tol=cfg.tol, caps=cfg.caps) for k in range(1, kmax + 1)]
        vals = np.maximum.accumulate(np.array(vals))
        full = max(vals[-1], rho_k_grid(f, f.dim + 1, cfg.weight_steps, tol=cfg.tol, caps=cfg.caps))
        table = RhoTable(vals[None, :], False, (f.label or "sampled",), np.array([full]))
        direction = "lower"
    else:
        raise InputError(f"unknown family {args.family!r}")
    result = {"family": args.family, "direction": direction, "table": table.to_dict()}
    rows = [{"label": lab, **{f"k={k + 1}": v for k, v in enumerate(row)}, "rho_full": full}
            for lab, row, full in zip(table.labels, table.values.tolist(), table.rho_full.tolist())]
    lines = [f"{r['label']}: " + ", ".join(f"{k}: {v:.12g}" for k, v in r.items() if k != "label")
             for r in rows]
    return result, rows, lines, EXIT_OK


def cmd_bound(args, cfg: RunConfig):
    data = _read_json(args.table)
    data = data.get("result", data)
    data = data.get("table", data)
    try:
        table = RhoTable.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed rho table: {exc}") from exc
    m = table.m if args.m is None else args.m
    if m > table.m:
        raise InputError(f"table has columns up to k={table.m + 1}; m={m} needs k={m + 1}")
    rep = bound_report(table, m)
    lines = [f"B = {rep.B:.12g} at k* = {list(rep.k_star)}",
             f"udell = {rep.bound_udell:.12g}, classic = {rep.bound_classic:.12g}",
             f"{'PASS' if rep.ordered else 'FAIL'} B <= udell <= classic"]
    return rep.to_dict(), None, lines, EXIT_OK if rep.ordered else EXIT_VERDICT


def cmd_demo(args, cfg: RunConfig):
    from .apps.dsm import build_dsm
    from .apps.num import build_num
    from .apps.report import gap_report

    if args.family == "num":
        K = args.K if len(args.K) > 1 else args.K[0]
        inst = build_num(cfg.seed, args.L, args.N, K, args.utility)
        rep = gap_report(inst, cfg)
        return rep.to_dict(), None, [rep.verdict_line()], EXIT_OK if rep.ok else EXIT_VERDICT
    Ns = args.sweep or [args.N]
    reports, rows = [], []
    for N in Ns:
        inst = build_dsm(cfg.seed, args.L, N, args.sigma, args.p)
        rep = gap_report(inst, cfg)
        reports.append(rep)
        rows.append({"N": N, "p": rep.p.value, "d": rep.d.value, "gap": rep.gap, "B": rep.bounds.B,
                     "B_times_N": rep.bounds.B * N, "udell": rep.bounds.bound_udell,
                     "classic": rep.bounds.bound_classic, "slack": rep.slack, "ok": rep.ok})
    ok = all(r.ok for r in reports)
    result = reports[0].to_dict() if len(reports) == 1 else {"sweep": [r.to_dict() for r in reports]}
    lines = [f"N={r['N']}: {rep.verdict_line()}" for r, rep in zip(rows, reports)]
    return result, rows, lines, EXIT_OK if ok else EXIT_VERDICT


# -- parser --------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=d)
    parser.add_argument("--tol-lp", type=float, default=d, dest="tol_lp")
    parser.add_argument("--grid-step", type=float, default=d, dest="grid_step")
    parser.add_argument("--out", choices=("json", "csv", "pretty"), default=d)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfgap", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="decompose a point of a Minkowski sum hull")
    _global_flags(p, suppress=True)
    p.add_argument("input", help="JSON with 'sets' (list of point lists) and 'z'")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--refined", action="store_true", help="use the minimal face budget k + n")
    mode.add_argument("--epigraph", action="store_true", help="z is the prefix; minimise the last coordinate")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("rho", help="tabulate k-th nonconvexity values")
    _global_flags(p, suppress=True)
    p.add_argument("family", help="min_box, neglogmax, h_sigma or sampled")
    p.add_argument("--n", type=int, nargs="+", help="dimensions (min_box, neglogmax)")
    p.add_argument("--sigma", type=float, nargs="+", help="noise levels (h_sigma)")
    p.add_argument("--file", help="sampled function JSON (sampled)")
    p.add_argument("--kmax", type=int, default=4)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("bound", help="refined, Udell and classic gap bounds from a rho table")
    _global_flags(p, suppress=True)
    p.add_argument("table", help="rho table JSON (as written by 'rho')")
    p.add_argument("--m", type=int, default=None, help="number of coupling constraints")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("demo", help="end-to-end gap report for a random application instance")
    _global_flags(p, suppress=True)
    p.add_argument("family", choices=("num", "dsm"))
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--K", type=_ints, default=[3], help="paths per user, one value or comma list")
    p.add_argument("--utility", choices=("throughput", "log"), default="throughput")
    p.add_argument("--sigma", type=_floats, default=None, help="tone noises, one value or comma list")
    p.add_argument("--p", type=_floats, default=None, help="power budgets, one value or comma list")
    p.add_argument("--sweep", type=_ints, default=None, help="dsm: comma list of tone counts")
    p.set_defaults(func=cmd_demo)
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.with_overrides(seed=getattr(args, "seed", None), grid_step=getattr(args, "grid_step", None),
                              out=getattr(args, "out", None), tol_lp=getattr(args, "tol_lp", None))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        for name in ("sigma", "p"):
            val = getattr(args, name, None)
            if isinstance(val, list) and len(val) == 1:
                setattr(args, name, val[0])
        result, rows, lines, code = args.func(args, cfg)
    except OutsideHull as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DecompositionError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (InputError, ValueError, KeyError, TypeError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    payload = {"command": args.command, "config": cfg.to_dict(), "result": result}
    _emit(payload, cfg.out, rows, lines)
    return code


if __name__ == "__main__":
    sys.exit(main())
