import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from scipy.optimize import lsq_linear

import props
from vepcone.cones import (ConvexCone, DimensionError, Polyhedron, RepresentationError, cone_from_dict,
                           cone_intersection, depth, dist, dist_many, member_many, dual, interior_member, is_pointed,
                           member, normal_cone_at, polyhedron_from_dict, reduce_rows, tangent_cone_at)

SEEDS = st.integers(0, 2 ** 32 - 1)


def _nnls(G, v):
    """Nonnegative least squares by bounded-variable LS (scipy's nnls misreports residuals in 1.15)."""
    lam = lsq_linear(G, v, bounds=(0, np.inf), method="bvls", tol=1e-14).x
    return lam, float(np.linalg.norm(G @ lam - v))


# ---------------------------------------------------------------- constructors and conversion

def test_orthant_basics():
    C = ConvexCone.orthant(2)
    assert member(C, [1, 2]) and not member(C, [-1, 2])
    assert dist(C, [-3, 4])[0] == pytest.approx(3.0)
    assert dual(C).G.tolist() == [[-1, 0], [0, -1]]
    assert C.pointed


def test_full_space_and_zero_cone():
    F = ConvexCone.full_space(3)
    Z = ConvexCone.zero(3)
    v = np.array([1.0, -2.0, 3.0])
    assert dist(F, v)[0] == 0.0
    assert dist(Z, v)[0] == pytest.approx(np.linalg.norm(v))
    assert not F.pointed and Z.pointed


def test_dimension_errors():
    with pytest.raises(DimensionError):
        ConvexCone.halfspaces(np.zeros((0, 2)))
    with pytest.raises(DimensionError):
        ConvexCone.halfspaces([[1, 0]], dim=3)
    with pytest.raises(DimensionError):
        member(ConvexCone.orthant(2), [1, 2, 3])
    with pytest.raises(DimensionError):
        Polyhedron.from_arrays([[1, 0]], [0, 1])


def test_empty_polyhedron_rejected():
    with pytest.raises(ValueError, match="empty"):
        Polyhedron.from_arrays([[1.0], [-1.0]], [1.0, 0.0])


def test_facet_enumeration_is_not_attempted():
    G = np.random.default_rng(0).standard_normal((3, 5))
    with pytest.raises(RepresentationError):
        ConvexCone.generators(G).to_halfspaces()


@pytest.mark.parametrize("G", [[[1, 0], [0, 1]], [[1, 1], [0, 1]], [[1, -1], [0, 0]], [[1, 0, -1], [0, 1, 0]]])
def test_2d_generator_conversion(G):
    C = ConvexCone.generators(np.array(G, float))
    H = C.to_halfspaces()
    rng = np.random.default_rng(1)
    for v in rng.standard_normal((200, 2)):
        assert dist(C, v)[0] == pytest.approx(dist(H, v)[0], abs=1e-10)


def test_dict_round_trip():
    for c in (ConvexCone.orthant(2), ConvexCone.halfspaces([[1, 2]], dim=2), ConvexCone.generators([[1], [0]])):
        d = c.to_dict()
        assert cone_from_dict(d).to_dict() == d
    P = polyhedron_from_dict({"A": [[1, 0]], "b": [0]}, n=2)
    assert polyhedron_from_dict(P.to_dict()).to_dict() == P.to_dict()


# ---------------------------------------------------------------- distance against nnls

@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_generator_distance_matches_nnls(seed):
    rng = np.random.default_rng(seed)
    d, k = int(rng.integers(2, 5)), int(rng.integers(1, 6))
    G = rng.standard_normal((d, k))
    v = rng.standard_normal(d)
    assert dist(ConvexCone.generators(G), v)[0] == pytest.approx(_nnls(G, v)[1], abs=1e-9)


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_halfspace_distance_via_moreau(seed):
    """dist(v, {Av >= 0}) equals the norm of the projection onto the polar cone(-A^T)."""
    rng = np.random.default_rng(seed)
    d, k = int(rng.integers(2, 5)), int(rng.integers(1, 6))
    A = rng.standard_normal((k, d))
    v = rng.standard_normal(d)
    polar = -A.T
    lam = _nnls(polar, v)[0]
    assert dist(ConvexCone.halfspaces(A), v)[0] == pytest.approx(np.linalg.norm(polar @ lam), abs=1e-9)


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_double_dual_property(seed):
    ok, info = props.check_double_dual(np.random.default_rng(seed))
    assert ok, info


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_dist_positive_homogeneity(seed):
    ok, info = props.check_dist_homogeneity(np.random.default_rng(seed))
    assert ok, info


def test_dist_many_matches_dist():
    rng = np.random.default_rng(3)
    for C in (ConvexCone.halfspaces(rng.standard_normal((3, 2))), ConvexCone.generators(rng.standard_normal((3, 4)))):
        V = rng.standard_normal((50, C.dim))
        assert np.allclose(dist_many(C, V), [dist(C, v)[0] for v in V], atol=1e-12)


def _true_dist(K, v):
    """Distance by bounded least squares: on the generators, or on the polar (Moreau)."""
    if K.kind == "generators":
        return _nnls(K.G, v)[1]
    lam = _nnls(-K.A.T, v)[0]
    return float(np.linalg.norm(-K.A.T @ lam))


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_member_many_matches_distances(seed):
    rng = np.random.default_rng(seed)
    K = props.random_cone(rng)
    V = rng.standard_normal((40, K.dim))
    # push some rows next to the boundary, at a few scales
    for i in range(12):
        V[i] = dist(K, V[i])[1] + 10.0 ** -(3 + i % 8) * rng.standard_normal(K.dim)
    tol = 10 ** rng.uniform(-11, -1, size=len(V))
    got = member_many(K, V, tol)
    d = np.array([_true_dist(K, v) for v in V])
    # the projection resolves distances to about 1e-10 (1 + |v|); closer calls are ties
    clear = np.abs(d - tol) > 1e-10 * (1 + np.linalg.norm(V, axis=1))
    assert np.array_equal(got[clear], (d <= tol)[clear])


# ---------------------------------------------------------------- operations

def test_tangent_cone_of_orthant():
    C = ConvexCone.orthant(2)
    assert tangent_cone_at(C, [0, 0]).A.tolist() == [[1, 0], [0, 1]]
    assert tangent_cone_at(C, [1, 0]).A.tolist() == [[0, 1]]
    assert tangent_cone_at(C, [1, 1]).is_full_space
    with pytest.raises(ValueError):
        tangent_cone_at(C, [-1, 0])


def test_normal_cone_of_box_corner():
    P = Polyhedron.box([0, 0], [1, 1])
    N = normal_cone_at(P, [1, 1])
    assert member(N, [1, 2]) and not member(N, [-1, 1])


def test_interior_member_and_depth():
    C = ConvexCone.orthant(2).to_halfspaces()
    assert interior_member(C, [1, 1], 0.5)
    assert not interior_member(C, [1, 0], 1e-9)
    assert not interior_member(C, [0, 0], 0.0)
    assert depth(C, np.array([2.0, 3.0])) == 2.0
    with pytest.raises(RepresentationError):
        interior_member(ConvexCone.generators([[1], [0]]), [1, 0], 0.1)


def test_reduce_rows_keeps_the_cone():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        A = np.abs(rng.standard_normal((12, d))) + 0.1
        R = reduce_rows(A)
        assert len(R) <= len(A)
        V = rng.standard_normal((400, d))
        a = np.all(V @ A.T >= -1e-12, axis=1)
        b = np.all(V @ R.T >= -1e-12, axis=1)
        assert np.array_equal(a, b)


def test_reduce_rows_2d_wedge():
    m = np.linspace(0.01, 1, 50)
    rows = np.vstack([np.column_stack([-(1 - m), np.ones_like(m)]), np.column_stack([1 + m, -np.ones_like(m)])])
    R = reduce_rows(rows)
    assert len(R) == 2
    expect = np.array([[-0.99, 1.0], [1.01, -1.0]])
    expect /= np.linalg.norm(expect, axis=1, keepdims=True)
    assert np.allclose(sorted(R.tolist()), sorted(expect.tolist()))


def test_intersection_and_pointedness():
    C = cone_intersection([ConvexCone.halfspaces([[1, 0]], dim=2), ConvexCone.halfspaces([[0, 1]], dim=2)])
    assert member(C, [1, 1]) and not member(C, [-1, 1])
    assert is_pointed(C)
    assert not is_pointed(ConvexCone.halfspaces([[1, 0]], dim=2))
    with pytest.raises(DimensionError):
        cone_intersection([ConvexCone.orthant(2), ConvexCone.orthant(3)])


def test_polyhedron_projection_and_membership():
    P = Polyhedron.box([0, 0], [1, 1])
    assert P.contains([0.5, 0.5]) and not P.contains([2, 0])
    d, p = dist(P, np.array([2.0, -1.0]))
    assert p.tolist() == pytest.approx([1.0, 0.0])
    assert d == pytest.approx(np.sqrt(2))
