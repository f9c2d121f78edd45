"""Regression against the frozen fixtures written by scripts/make_golden.py."""
import json
from pathlib import Path

import numpy as np
import pytest

from sfgap.apps.dsm import DsmInstance, dsm_dual_grid, dsm_primal_grid
from sfgap.apps.num import NumInstance, num_dual_opt, num_primal_exact
from sfgap.apps.report import gap_report, perturbed_primal

FIXTURES = Path(__file__).parent / "fixtures" / "v1"
NUM = json.loads((FIXTURES / "num_golden.json").read_text())
DSM = json.loads((FIXTURES / "dsm_golden.json").read_text())


def test_fixture_metadata():
    for doc in (NUM, DSM):
        assert doc["meta"]["generator"] == "scripts/make_golden.py"
        assert doc["meta"]["format"] == 1
    assert len(NUM["instances"]) == 20
    for e in NUM["instances"]:
        inst = e["instance"]
        assert inst["N"] <= 3 and inst["L"] <= 3 and max(inst["K"]) <= 3
        assert e["convergence"]["spread"] <= e["convergence"]["tolerance"]
        assert 0 <= e["convergence"]["sandwich"] + 1e-9 <= e["convergence"]["tolerance"] + 1e-9


@pytest.mark.parametrize("entry", NUM["instances"], ids=lambda e: f"seed{e['params']['seed']}")
def test_num_golden_values(entry):
    inst = NumInstance.from_dict(entry["instance"])
    assert num_primal_exact(inst).value == pytest.approx(entry["p"], rel=1e-9, abs=1e-12)
    assert num_dual_opt(inst).value == pytest.approx(entry["d"], abs=1e-9)
    rep = gap_report(inst)
    assert rep.bounds.B == entry["B"]
    assert list(rep.bounds.k_star) == entry["k_star"]


def test_seed7_golden():
    g = NUM["seed7"]
    inst = NumInstance.from_dict(g["instance"])
    assert num_primal_exact(inst).value == pytest.approx(g["p"], rel=1e-9)
    assert num_dual_opt(inst).value == pytest.approx(g["d"], abs=1e-9)
    pert = perturbed_primal(inst, np.array(g["perturbed"]["z"]))
    assert pert.value == pytest.approx(g["perturbed"]["value"], rel=1e-9)
    assert pert.value <= g["p"]
    assert gap_report(inst).to_dict()["verdicts"] == g["report"]["verdicts"]


@pytest.mark.parametrize("key", ["unit", "sweep0"])
def test_dsm_golden_first_level(key):
    entry = DSM["unit"] if key == "unit" else DSM["sweep"][0]
    inst = DsmInstance.from_dict(entry["instance"])
    level = entry["levels"][0]
    assert dsm_primal_grid(inst, level["step"]).value == pytest.approx(level["p_grid"], abs=1e-12)
    assert dsm_dual_grid(inst, level["step"]).value == pytest.approx(level["d_grid"], abs=1e-12)


def test_dsm_golden_slack_decreases():
    for entry in [DSM["unit"], *DSM["sweep"]]:
        slacks = [lv["slack_primal"] + lv["slack_dual"] for lv in entry["levels"]]
        assert slacks[0] > slacks[1] > slacks[2]
        for lv in entry["levels"]:
            assert lv["p_grid"] - lv["d_grid"] >= -1e-12
