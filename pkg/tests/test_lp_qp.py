"""The dense simplex and the active-set projection against scipy references."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from scipy.optimize import linprog as sp_linprog
from scipy.optimize import lsq_linear, minimize

from vepcone.lp import INFEASIBLE, UNBOUNDED, feasible_point, linprog, linprog_rows
from vepcone.qp import project_polyhedron

SEEDS = st.integers(0, 2 ** 32 - 1)


def _random_lp(rng):
    n = int(rng.integers(1, 5))
    m_ub = int(rng.integers(0, 6))
    m_eq = int(rng.integers(0, min(n, 2) + 1))
    c = rng.standard_normal(n)
    A_ub = rng.standard_normal((m_ub, n)) if m_ub else None
    b_ub = rng.standard_normal(m_ub) if m_ub else None
    A_eq = rng.standard_normal((m_eq, n)) if m_eq else None
    b_eq = rng.standard_normal(m_eq) if m_eq else None
    kinds = rng.integers(0, 4, size=n)
    bounds = []
    for k in kinds:
        lo, hi = sorted(rng.uniform(-3, 3, size=2))
        bounds.append([(0, None), (None, None), (lo, hi), (None, hi)][k])
    return c, A_ub, b_ub, A_eq, b_eq, bounds


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_linprog_matches_highs(seed):
    c, A_ub, b_ub, A_eq, b_eq, bounds = _random_lp(np.random.default_rng(seed))
    ref = sp_linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    got = linprog(c, A_ub, b_ub, A_eq, b_eq, bounds=bounds)
    if ref.status == 0:
        assert got.success, got.status
        assert got.fun == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
        x = got.x
        if A_ub is not None:
            assert np.all(A_ub @ x <= b_ub + 1e-7)
        if A_eq is not None:
            assert np.allclose(A_eq @ x, b_eq, atol=1e-7)
    elif ref.status in (2, 3):
        # HiGHS presolve can report an unbounded model as infeasible, so settle
        # feasibility separately with a zero objective
        feas = sp_linprog(np.zeros_like(c), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                          method="highs")
        assert got.status == (UNBOUNDED if feas.status == 0 else INFEASIBLE)


def test_linprog_degenerate_cycling_example():
    # a classic cycling example for the largest-coefficient rule
    c = np.array([-10.0, 57.0, 9.0, 24.0])
    A = np.array([[0.5, -5.5, -2.5, 9.0], [0.5, -1.5, -0.5, 1.0], [1.0, 0, 0, 0]])
    b = np.array([0.0, 0.0, 1.0])
    got = linprog(c, A, b)
    ref = sp_linprog(c, A_ub=A, b_ub=b, method="highs")
    assert got.success and got.fun == pytest.approx(ref.fun)


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_row_generation_matches_full_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    A = rng.standard_normal((int(rng.integers(40, 120)), n))
    x0 = rng.uniform(-0.5, 0.5, size=n)
    b = A @ x0 + np.abs(rng.standard_normal(len(A)))
    c = rng.standard_normal(n)
    bounds = [(-1, 1)] * n
    full = linprog(c, A, b, bounds=bounds)
    rows = linprog_rows(c, A, b, bounds)
    assert full.success and rows.success
    assert rows.fun == pytest.approx(full.fun, abs=1e-8)
    assert np.all(A @ rows.x <= b + 1e-8)


def test_feasible_point():
    x = feasible_point(A_ub=[[1.0, 1.0]], b_ub=[-1.0])
    assert x is not None and x.sum() <= -1.0 + 1e-9
    assert feasible_point(A_ub=[[1.0], [-1.0]], b_ub=[-1.0, -1.0]) is None


# ---------------------------------------------------------------- projection

def _nnls(G, v):
    lam = lsq_linear(G, v, bounds=(0, np.inf), method="bvls", tol=1e-14).x
    return lam, float(np.linalg.norm(G @ lam - v))


def _kkt_ok(v, A, b, p, tol=1e-7):
    """p is the projection iff p is feasible and v - p = -A_act^T lam with lam >= 0."""
    if np.any(A @ p - b < -tol):
        return False
    act = np.abs(A @ p - b) <= 1e-7 * (1 + np.abs(b))
    if not np.any(act):
        return np.linalg.norm(v - p) <= tol
    lam, res = _nnls(-A[act].T, v - p)
    return res <= tol * (1 + np.linalg.norm(v))


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_projection_satisfies_kkt(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 5)), int(rng.integers(1, 8))
    x0 = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    b = A @ x0 - np.abs(rng.standard_normal(m)) * (rng.random(m) < 0.7)
    v = 3 * rng.standard_normal(n)
    p = project_polyhedron(v, A, b, x0)
    assert _kkt_ok(v, A, b, p), (v, A, b, p)


def test_projection_against_slsqp():
    rng = np.random.default_rng(7)
    for _ in range(50):
        A = rng.standard_normal((4, 3))
        x0 = np.zeros(3)
        b = -np.abs(rng.standard_normal(4))
        v = 3 * rng.standard_normal(3)
        p = project_polyhedron(v, A, b, x0)
        ref = minimize(lambda x: 0.5 * np.sum((x - v) ** 2), x0, jac=lambda x: x - v, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": lambda x: A @ x - b, "jac": lambda x: A}],
                       options={"ftol": 1e-14, "maxiter": 500})
        assert np.linalg.norm(p - v) <= np.linalg.norm(ref.x - v) + 1e-6


def test_projection_thin_wedge():
    # nearly parallel active rows: degenerate working sets must not stall
    m = 1 / 101
    A = np.array([[-(1 - m), 1.0], [1 + m, -1.0]])
    b = np.zeros(2)
    for v in ([-1.0, 0.3], [0.2, -1.0], [-5.0, -5.0], [1.0, 3.0]):
        v = np.array(v)
        p = project_polyhedron(v, A, b, np.zeros(2))
        assert _kkt_ok(v, A, b, p)


def test_projection_no_constraints():
    v = np.array([1.0, 2.0])
    assert project_polyhedron(v, np.zeros((0, 2)), np.zeros(0), np.zeros(2)).tolist() == [1.0, 2.0]
