import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from oracles import lower_convex_envelope_1d
from sfgap.cli import main
from sfgap.config import RunConfig

FIXTURES = Path(__file__).parent / "fixtures" / "v1"
SQUARE = FIXTURES / "unit_square_edge.json"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


# -- decompose -----------------------------------------------------------------

def test_decompose_refined_square_edge(capsys):
    code, doc = run_json(capsys, "decompose", SQUARE, "--refined")
    assert code == 0
    res = doc["result"]
    assert sum(res["k"]) <= 3 and res["within_budget"]
    assert res["face"]["k"] == 1
    assert doc["command"] == "decompose"


def test_decompose_plain(capsys):
    code, doc = run_json(capsys, "decompose", SQUARE)
    assert code == 0 and doc["result"]["within_budget"]
    assert sum(doc["result"]["k"]) <= 4


def test_decompose_epigraph(capsys, tmp_path):
    path = write(tmp_path, "epi.json", {"sets": [[[0, 1], [1, 0], [2, 1]]], "z": [1.5]})
    code, doc = run_json(capsys, "decompose", path, "--epigraph")
    assert code == 0
    assert doc["result"]["target"] == [1.5, 0.5]


def test_decompose_outside_exits_2(capsys, tmp_path):
    path = write(tmp_path, "out.json", {"sets": [[[0, 0], [1, 0]], [[0, 0], [0, 1]]], "z": [2, 0]})
    code, out, err = run(capsys, "decompose", path)
    assert code == 2 and out == "" and "infeasible" in err


def test_decompose_singleton(capsys, tmp_path):
    path = write(tmp_path, "one.json", {"sets": [[[1.0, 2.0]]], "z": [1.0, 2.0]})
    code, doc = run_json(capsys, "decompose", path)
    assert code == 0 and doc["result"]["k"] == [1]


@pytest.mark.parametrize("obj", [{"sets": [[[0, 0]]]}, {"sets": "x", "z": [0]}, {"sets": [[[0, 0], [1]]], "z": [0, 0]}])
def test_decompose_malformed_exits_1(capsys, tmp_path, obj):
    code, _, err = run(capsys, "decompose", write(tmp_path, "bad.json", obj))
    assert code == 1 and "bad input" in err


def test_missing_file_exits_1(capsys, tmp_path):
    assert run(capsys, "decompose", tmp_path / "nope.json")[0] == 1


def test_cap_exits_3(capsys, tmp_path):
    cfg = write(tmp_path, "cfg.json", {"caps": {"minkowski": 2}})
    assert run(capsys, "--config", cfg, "decompose", SQUARE, "--refined")[0] == 3


# -- rho and bound -------------------------------------------------------------

def test_rho_min_box(capsys):
    code, doc = run_json(capsys, "rho", "min_box", "--n", "3", "--kmax", "4")
    assert code == 0
    np.testing.assert_allclose(doc["result"]["table"]["rho"][0], [0, 0.5, 2 / 3, 2 / 3], atol=1e-15)


def test_rho_neglogmax(capsys):
    code, doc = run_json(capsys, "rho", "neglogmax", "--n", "2", "--kmax", "3")
    assert doc["result"]["table"]["rho"][0] == [0.0, math.log(2), math.log(2)]


def test_rho_sampled_matches_1d_envelope(capsys):
    code, doc = run_json(capsys, "rho", "sampled", "--file", FIXTURES / "sampled_1d.json", "--kmax", "3")
    assert code == 0 and doc["result"]["direction"] == "lower"
    f = json.loads((FIXTURES / "sampled_1d.json").read_text())
    xs = np.array(f["points"])[:, 0]
    fs = np.array(f["values"], dtype=float)
    rho = max(v - lower_convex_envelope_1d(xs, fs, x) for x, v in zip(xs, fs))
    vals = doc["result"]["table"]["rho"][0]
    assert vals[0] == 0.0
    assert vals[1] == pytest.approx(rho, abs=1e-9) and vals[2] == pytest.approx(rho, abs=1e-9)


@pytest.mark.parametrize("argv", [["rho", "cubes"], ["rho", "sampled"], ["rho", "min_box", "--kmax", "0"],
                                  ["nosuch"], []])
def test_bad_arguments_exit_1(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_bound_uniform_and_pipe(capsys, tmp_path):
    code, out, _ = run(capsys, "rho", "neglogmax", "--n", "2", "2", "2", "--kmax", "3")
    path = tmp_path / "table.json"
    path.write_text(out)
    code, doc = run_json(capsys, "bound", path, "--m", "2")
    assert code == 0
    assert doc["result"]["B"] == pytest.approx(2 * math.log(2), abs=1e-15)
    assert doc["result"]["bound_udell"] <= doc["result"]["bound_classic"]


def test_bound_single_block(capsys, tmp_path):
    path = write(tmp_path, "t.json", {"rho": [[0, 0.2, 0.5, 0.7]], "exact": True})
    code, doc = run_json(capsys, "bound", path, "--m", "2")
    assert code == 0 and doc["result"]["B"] == 0.5  # rho^{m+1}


def test_bound_bad_table(capsys, tmp_path):
    path = write(tmp_path, "t.json", {"rho": [[0.3, 0.2]], "exact": True})
    assert run(capsys, "bound", path)[0] == 1
    path = write(tmp_path, "t2.json", {"rho": [[0, 0.2]], "exact": True})
    assert run(capsys, "bound", path, "--m", "3")[0] == 1


# -- demo ----------------------------------------------------------------------

def test_demo_num_seed7(capsys):
    code, doc = run_json(capsys, "--seed", "7", "demo", "num", "--L", "2", "--N", "2", "--K", "3")
    assert code == 0
    golden = json.loads((FIXTURES / "num_golden.json").read_text())["seed7"]["report"]
    assert doc["result"]["verdicts"] == golden["verdicts"]
    assert doc["result"]["minimization"] == golden["minimization"]
    assert doc["config"]["seed"] == 7


def test_demo_num_linear_case_has_no_gap(capsys):
    code, doc = run_json(capsys, "demo", "num", "--K", "1", "--N", "3")
    assert code == 0
    assert abs(doc["result"]["minimization"]["gap"]) <= 1e-9
    assert doc["result"]["bounds"]["B"] == 0.0


def test_demo_dsm_sweep_csv(capsys):
    code, out, _ = run(capsys, "--out", "csv", "demo", "dsm", "--sigma", "0.5", "--sweep", "2,4")
    assert code == 0
    lines = out.strip().splitlines()
    header = lines[0].split(",")
    assert header[:2] == ["N", "p"] and len(lines) == 3
    bn = [float(row.split(",")[header.index("B_times_N")]) for row in lines[1:]]
    assert bn[0] == pytest.approx(bn[1], abs=1e-12)


def test_pretty_verdict_line(capsys):
    code, out, _ = run(capsys, "--out", "pretty", "demo", "num", "--L", "1", "--N", "2", "--K", "2")
    assert code == 0 and out.startswith("PASS")


# -- config and determinism ----------------------------------------------------

def test_config_embedded_and_overrides(capsys, tmp_path):
    cfg = write(tmp_path, "cfg.json", {"seed": 3, "tol": {"lp": 1e-8}})
    code, doc = run_json(capsys, "--config", cfg, "--grid-step", "0.125", "rho", "min_box", "--n", "2")
    c = RunConfig.from_dict(doc["config"])
    assert c.seed == 3 and c.tol.lp == 1e-8 and c.grid_step == 0.125
    code, doc = run_json(capsys, "rho", "min_box", "--tol-lp", "1e-7", "--seed", "5")
    assert doc["config"]["tol"]["lp"] == 1e-7 and doc["config"]["seed"] == 5


def _subprocess(argv, threads):
    env = dict(os.environ, SFGAP_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "sfgap", *argv], capture_output=True, env=env, check=False)


@pytest.mark.parametrize("argv", [
    ["demo", "num", "--L", "2", "--N", "3", "--K", "2", "--utility", "log"],
    ["demo", "dsm", "--sweep", "2,4"],
    ["decompose", str(SQUARE), "--refined"],
])
def test_byte_identical_across_runs_and_threads(argv):
    outs = [_subprocess(argv, t) for t in (1, 1, 4)]
    assert all(o.returncode == 0 for o in outs)
    assert outs[0].stdout == outs[1].stdout == outs[2].stdout
