import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_table
from oracles import allocation_brute_force
from sfgap.gapbounds import (bound_classic, bound_report, bound_udell, closed_form_dsm,
                             closed_form_num_log, closed_form_num_throughput, solve_allocation)
from sfgap.nonconvexity import RhoTable, table_h_sigma, table_min_box, table_neglogmax


def test_spec_table_matches_enumeration():
    rows = [[0, 0.5, 0.6], [0, 0.4, 0.7], [0, 0.1, 0.2]]
    B, ks = solve_allocation(RhoTable(np.array(rows), True), 2)
    assert B == allocation_brute_force(rows, 2)
    assert B == pytest.approx(0.9)
    assert sum(ks) <= 5 and all(1 <= k <= 3 for k in ks)


@pytest.mark.parametrize("n,m", [(1, 1), (3, 1), (2, 4), (5, 3), (4, 4)])
def test_uniform_rows(n, m):
    rho = 0.37
    vals = np.full((n, m + 1), rho)
    vals[:, 0] = 0.0
    B, _ = solve_allocation(RhoTable(vals, True), m)
    assert B == min(m, n) * rho


def test_single_block_takes_cap():
    t = RhoTable(np.array([[0.0, 0.2, 0.3, 0.9]]), True)
    assert solve_allocation(t, 3) == (0.9, (4,))


def test_ties_prefer_smaller_k_first():
    vals = np.tile([0.0, 1.0, 1.0], (3, 1))
    _, ks = solve_allocation(RhoTable(vals, True), 2)
    assert ks == (1, 2, 2)


def test_nonconcave_rows_defeat_greedy():
    # greedy by marginal gain picks block 0 first; the optimum spends both units on block 1
    vals = np.array([[0.0, 0.5, 0.5], [0.0, 0.1, 0.9]])
    assert solve_allocation(RhoTable(vals, True), 2) == (0.9, (1, 3))


def test_table_too_narrow():
    with pytest.raises(ValueError):
        solve_allocation(RhoTable(np.array([[0.0, 0.1]]), True), 3)


@pytest.mark.parametrize("seed", range(100))
def test_dp_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 6)), int(rng.integers(0, 6))
    t = random_table(rng, n, m)
    B, ks = solve_allocation(t, m)
    assert B == allocation_brute_force(t.values.tolist(), m)
    assert sum(ks) <= m + n and all(1 <= k <= m + 1 for k in ks)
    assert B == sum(t.values[i, k - 1] for i, k in enumerate(ks))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 6), m=st.integers(0, 6))
def test_ordering_chain(seed, n, m):
    t = random_table(np.random.default_rng(seed), n, m)
    rep = bound_report(t, m)
    assert rep.ordered


@pytest.mark.parametrize("rhos,m,expect", [([1, 1, 1], 1, 2), ([0.7], 3, 0.7), ([0.9, 0.5], 5, 1.8)])
def test_classic(rhos, m, expect):
    assert bound_classic(rhos, m) == pytest.approx(expect)


@pytest.mark.parametrize("rhos,m,expect", [([1, 1, 1], 1, 1), ([0.1, 0.9, 0.5], 2, 1.4), ([0.2, 0.3], 4, 0.5)])
def test_udell(rhos, m, expect):
    assert bound_udell(rhos, m) == pytest.approx(expect)


def test_empty_lists():
    with pytest.raises(ValueError):
        bound_classic([], 1)
    with pytest.raises(ValueError):
        bound_udell([], 1)


def test_report_flags():
    rep = bound_report(table_h_sigma([0.5, 0.5], 2, 0.5))
    assert not rep.B_exact and not rep.udell_exact
    d = rep.to_dict()
    assert d["flags"]["B"] == "upper_bound"
    rep = bound_report(table_min_box([3, 3], 2))
    assert rep.B_exact and rep.to_dict()["flags"]["classic"] == "exact"


# -- closed forms --------------------------------------------------------------

@pytest.mark.parametrize("L", [1, 2, 3, 5])
def test_throughput_half_at_N_equals_L(L):
    assert closed_form_num_throughput(L, L, 0.8).refined == pytest.approx(L * 0.8 / 2, abs=1e-15)


def test_throughput_single_link():
    for N in (1, 2, 7):
        assert closed_form_num_throughput(N, 1, 1.0).refined == 0.5


@pytest.mark.parametrize("N,L", [(1, 1), (3, 1), (1, 4), (3, 2), (4, 4), (9, 3)])
def test_throughput_improves_on_old(N, L):
    cf = closed_form_num_throughput(N, L, 1.0)
    if min(N, L) == 1:
        assert cf.refined == cf.udell  # both equal c_max L/(L+1)
    else:
        assert cf.refined < cf.udell


@pytest.mark.parametrize("L", [1, 2, 4])
def test_log_at_N_equals_L(L):
    cf = closed_form_num_log(L, L)
    assert cf.refined == L * math.log(2)
    assert cf.udell == L * math.log(L + 1)


def test_dsm_closed_form():
    assert closed_form_dsm(2, 2, 1.0).refined == pytest.approx(math.log(2), abs=1e-15)
    for N in (10, 100, 1000):
        assert N * closed_form_dsm(N, 3, 0.5).refined == pytest.approx(3 * math.log(4), abs=1e-12)
    cf = closed_form_dsm(5, 3, 1.0)
    assert cf.refined <= cf.udell


@pytest.mark.parametrize("bad", [(0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.0)])
def test_closed_form_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        closed_form_num_throughput(*bad)


@pytest.mark.parametrize("N,L", [(1, 1), (2, 2), (3, 2), (2, 3), (4, 3), (5, 5)])
def test_tables_meet_closed_forms(N, L):
    t = table_min_box([L + 1] * N, L)
    B = bound_report(t, L).B
    cf = closed_form_num_throughput(N, L, 1.0).refined
    assert B <= cf + 1e-12
    t = table_neglogmax([L + 1] * N, L)
    assert bound_report(t, L).B <= closed_form_num_log(N, L).refined + 1e-12
    if N == L:
        assert B == pytest.approx(cf, abs=1e-12)
        assert bound_report(t, L).B == pytest.approx(closed_form_num_log(N, L).refined, abs=1e-12)
