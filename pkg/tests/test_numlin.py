import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from generators import random_lp
from oracles import lp_vertex_enumeration
from sfgap.numlin import (LpProblem, LpStatus, affine_rank, orthonormal_frame,
                          residuals, solve_lp)


def test_two_vertex_tie_prefers_lowest_index():
    sol = solve_lp(LpProblem(c=[-1, -1], A_ub=[[1, 1]], b_ub=[1]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(-1)
    np.testing.assert_allclose(sol.x, [1, 0])


def test_forced_equality():
    sol = solve_lp(LpProblem(c=[0], A_eq=[[1]], b_eq=[1]))
    assert sol.optimal
    assert sol.x[0] == pytest.approx(1)


def test_infeasible():
    sol = solve_lp(LpProblem(c=[0], A_ub=[[1]], b_ub=[-1]))
    assert sol.status is LpStatus.INFEASIBLE


def test_unbounded():
    sol = solve_lp(LpProblem(c=[-1, 0], A_ub=[[0, 1]], b_ub=[1]))
    assert sol.status is LpStatus.UNBOUNDED


def test_lower_bounds_shift():
    sol = solve_lp(LpProblem(c=[1, 1], A_ub=[[-1, -1]], b_ub=[-3], lb=[1, -2]))
    assert sol.optimal
    assert sol.objective == pytest.approx(3)
    assert np.all(sol.x >= np.array([1, -2]) - 1e-12)


def test_redundant_equalities_are_dropped():
    A = [[1, 1, 0], [2, 2, 0], [0, 1, 1]]
    sol = solve_lp(LpProblem(c=[1, 2, 3], A_eq=A, b_eq=[1, 2, 1]))
    assert sol.optimal
    assert sol.objective == pytest.approx(2)  # x=(0,1,0)


def _check_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    c, A_eq, b_eq, A_ub, b_ub = random_lp(rng)
    sol = solve_lp(LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub))
    best, _ = lp_vertex_enumeration(c, A_eq, b_eq, A_ub, b_ub)
    if best is None:
        assert sol.status is LpStatus.INFEASIBLE
        return
    assert sol.optimal
    assert abs(sol.objective - best) <= 1e-9 * max(1.0, abs(best))
    prob = LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub)
    assert residuals(prob, sol.x) <= 1e-9
    active = int(np.sum(np.abs(A_ub @ sol.x - b_ub) <= 1e-9))
    assert np.count_nonzero(sol.x) <= A_eq.shape[0] + active


@pytest.mark.parametrize("seed", range(60))
def test_matches_vertex_enumeration(seed):
    _check_against_enumeration(seed)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_vertex_enumeration_property(seed):
    _check_against_enumeration(seed)


@pytest.mark.parametrize("points, rank", [
    ([[0, 0], [1, 0], [0, 1]], 2),
    ([[3, 4]], 0),
    ([[0, 0], [1, 1], [2, 2]], 1),
])
def test_affine_rank(points, rank):
    assert affine_rank(points) == rank


def test_affine_rank_rejects_empty():
    with pytest.raises(ValueError):
        affine_rank(np.zeros((0, 2)))


def test_frame_examples():
    np.testing.assert_allclose(orthonormal_frame([[1, 0]], 2), np.eye(2))
    np.testing.assert_allclose(orthonormal_frame([], 3), np.eye(3))
    Q = orthonormal_frame([np.array([1, 1]) / np.sqrt(2)], 2)
    np.testing.assert_allclose(Q @ Q.T, np.eye(2), atol=1e-12)
    assert abs(abs(Q[:, 1] @ (np.array([1, -1]) / np.sqrt(2))) - 1) < 1e-12


def test_frame_rejects_dependent():
    with pytest.raises(ValueError):
        orthonormal_frame([[1, 0], [2, 0]], 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 10**6))
def test_frame_is_orthogonal(dim, k, seed):
    k = min(k, dim)
    B = np.random.default_rng(seed).normal(size=(k, dim))
    Q = orthonormal_frame(list(B), dim)
    assert np.abs(Q.T @ Q - np.eye(dim)).max() <= 1e-10
    if k:
        # leading columns span the same subspace as the input
        proj = Q[:, :k] @ Q[:, :k].T
        np.testing.assert_allclose(proj @ B.T, B.T, atol=1e-9)
