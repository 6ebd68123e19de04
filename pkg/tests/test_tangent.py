import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

import props
from vepcone.cones import ConvexCone, Polyhedron
from vepcone.tangent import (ConeOracle, FunctionOracle, PolyhedronOracle, UnionOracle, contingent_cone_sampled,
                             default_directions, estimate_from_mask, feasible_direction_member,
                             inner_direction_member, misclassifications, polyhedral_tangent,
                             radial_cone_member, score_against_cone, t_grid)

SEEDS = st.integers(0, 2 ** 32 - 1)


def _sequence_set():
    """{0} and the points 1/k on the real line."""

    def contains(y):
        y = float(y[0])
        if y == 0.0:
            return True
        if y < 0 or y > 1:
            return False
        k = round(1 / y)
        return k >= 1 and abs(y - 1 / k) <= 1e-12 * y

    def distance(y):
        y = float(y[0])
        if y <= 0:
            return -y
        if y >= 1:
            return y - 1
        k = math.floor(1 / y)
        return min(abs(y - 1 / k), abs(y - 1 / (k + 1)), y)

    return FunctionOracle(contains, distance, name="sequence")


def _circle():
    # membership at float precision: a looser tolerance thickens the circle, and tangent
    # steps t with t^2/2 below it would count as hits
    return FunctionOracle(lambda y: abs(np.hypot(*y) - 1) <= 4e-16,
                          lambda y: abs(np.hypot(*y) - 1), name="circle")


# ---------------------------------------------------------------- worked examples

def test_sequence_set_is_radial_but_not_feasible():
    S = _sequence_set()
    # the step grid 0.1 * 2^-k lands on 1/(10 * 2^k), which is in the set
    assert radial_cone_member(S, [0.0], [1.0])
    assert not feasible_direction_member(S, [0.0], [1.0])
    assert not radial_cone_member(S, [0.0], [-1.0])
    est = contingent_cone_sampled(S, [0.0], [[1.0], [-1.0]])
    assert est.verdicts.tolist() == [True, False]


def test_orthant_feasible_versus_inner():
    K = PolyhedronOracle(Polyhedron.from_arrays(np.eye(2), np.zeros(2)))
    x = np.zeros(2)
    assert feasible_direction_member(K, x, [1.0, 0.0])
    assert not inner_direction_member(K, x, [1.0, 0.0])
    assert feasible_direction_member(K, x, [1.0, 1.0])
    assert inner_direction_member(K, x, [1.0, 1.0])
    assert not feasible_direction_member(K, x, [1.0, -0.1])


def test_circle_tangent_is_not_radial():
    C = _circle()
    x = np.array([1.0, 0.0])
    assert not radial_cone_member(C, x, [0.0, 1.0])
    est = contingent_cone_sampled(C, x)
    # the tangent line is {v1 = 0}; curvature shifts dist/t by at most t/2, so the
    # verdict is pinned outside a band of half-width t/2 around tau
    ts = t_grid()
    v1 = np.abs(est.directions[:, 0])
    assert np.all(est.verdicts[v1 <= est.tau - ts[-1] / 2])
    assert not np.any(est.verdicts[v1 > est.tau + ts[0] / 2])
    assert est.verdicts.sum() > 0


def test_polyhedron_sampled_matches_exact():
    P = Polyhedron.box([-1, 0], [1, 1])
    x = np.array([0.0, 0.0])
    T = polyhedral_tangent(P, x)
    est = contingent_cone_sampled(PolyhedronOracle(P), x)
    assert len(misclassifications(est, T)) == 0
    assert T.A.tolist() == [[0.0, 1.0]]
    with pytest.raises(ValueError):
        polyhedral_tangent(P, [5.0, 5.0])


def test_cone_oracle_with_apex():
    O = ConeOracle(ConvexCone.orthant(2), apex=[1.0, 1.0])
    assert O.contains_many([[2.0, 1.0], [0.5, 1.0]]).tolist() == [True, False]
    est = contingent_cone_sampled(O, [1.0, 1.0])
    assert len(misclassifications(est, ConvexCone.orthant(2).to_halfspaces())) == 0


def test_union_oracle():
    a = PolyhedronOracle(Polyhedron.from_arrays([[-1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]))
    b = PolyhedronOracle(Polyhedron.from_arrays([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]))
    U = UnionOracle([a, b])
    x = np.zeros(2)
    assert radial_cone_member(U, x, [1, 1]) and radial_cone_member(U, x, [-1, -1])
    assert not radial_cone_member(U, x, [1, -1])


# ---------------------------------------------------------------- grids and scores

def test_t_grid_and_default_directions():
    ts = t_grid()
    assert ts[0] == 0.1 and len(ts) == 12 and np.allclose(ts[1:] / ts[:-1], 0.5)
    U = default_directions(2)
    assert U.shape == (360, 2) and np.allclose(np.linalg.norm(U, axis=1), 1)
    assert default_directions(3).shape[1] == 3


def test_score_against_cone_is_distance():
    est = score_against_cone(ConvexCone.orthant(2), [[1, 0], [-1, 0], [0.6, -0.8]])
    assert est.scores.tolist() == pytest.approx([0.0, 1.0, 0.8])
    assert est.verdicts.tolist() == [True, False, False]


def test_estimate_from_mask_scores_by_angle():
    U = default_directions(2, 8)
    mask = np.zeros(8, bool)
    mask[0] = True
    est = estimate_from_mask(U, mask, np.zeros(2), "inner")
    assert est.scores[0] == 0.0
    assert est.scores[1] == pytest.approx(math.sin(math.pi / 4))
    assert est.scores[4] == 1.0
    d = est.to_dict()
    assert d["n_members"] == 1 and len(d["directions"]) == 8


# ---------------------------------------------------------------- properties

@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_notion_chain_property(seed):
    ok, info = props.check_notion_chain(np.random.default_rng(seed))
    assert ok, info


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_polyhedral_w_equals_t_property(seed):
    ok, info = props.check_polyhedral_w_equals_t(np.random.default_rng(seed))
    assert ok, info
