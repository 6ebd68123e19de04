import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

import props
from vepcone.deriv import (DerivativeFamily, MissingDerivativeError, ScalarFn, compose_family, dini_derivatives,
                           dini_many, equicontinuity_check, fd_bderivative, fd_family, homogeneity_defect,
                           regular_subdiff_member, strictness_check, subdiff_candidates, uniformity_check,
                           upper_subdiff_member)
from vepcone.grids import sphere_grid
from vepcone.registry import golden, load_example, names

SEEDS = st.integers(0, 2 ** 32 - 1)


# ---------------------------------------------------------------- families

def test_ex31_family_at_zero_matches_worked_value():
    inst = load_example("ex31")
    M = inst.deriv.matrices(np.zeros((1, 2)))[0]
    assert M.tolist() == golden("ex31")["family_at_zero"]["limit"]


@pytest.mark.parametrize("name", names("vep"))
def test_registry_family_matches_finite_differences(name):
    inst = load_example(name)
    x = inst.reference_point
    rng = np.random.default_rng(0)
    Z = inst.z_sample[rng.choice(len(inst.z_sample), size=16)]
    U = sphere_grid(inst.n, 16)
    exact = inst.deriv.apply(Z, U)
    fd = fd_family(inst, x).apply(Z, U)
    assert np.allclose(fd, exact, atol=1e-6, rtol=1e-6)


def test_ex32_family_against_hand_derivative():
    # f = x^2 z/(z^2+1): derivative at 0 vanishes; at x0 it is 2 x0 z/(z^2+1)
    inst = load_example("ex32")
    r = fd_bderivative(inst, [0.7], [2.0], [1.0])
    assert r.value[0] == pytest.approx(2 * 0.7 * 2 / 5, rel=1e-8)
    assert not r.flagged


def test_fd_flags_a_kink():
    inst = load_example("separable-box")
    from vepcone.registry import problem_document
    from vepcone.problemfile import load_problem
    doc = problem_document("identity-plane")
    doc["f"] = ["abs(x1 - 0.001) - 0.001", "x2"]
    doc.pop("bderiv", None)
    kink, _ = load_problem(doc)
    assert fd_bderivative(kink, [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]).flagged
    assert fd_bderivative(inst, inst.reference_point, inst.z_sample[0], [1.0, 0.0]).value.shape == (inst.m,)
    with pytest.raises(ValueError):
        fd_bderivative(inst, inst.reference_point, inst.z_sample[0], [0.0, 0.0])


def test_map_family_is_positively_homogeneous():
    fam = DerivativeFamily.from_map_exprs(["abs(u1) + max(u2, 0)*z1", "min(u1, u2)"], 2, np.zeros(2))
    Z = np.array([[0.5, 0.0], [-2.0, 1.0]])  # z lives in K, a subset of R^n
    U = sphere_grid(2, 32)
    assert homogeneity_defect(fam, Z, U) <= 1e-12
    assert not fam.is_linear
    assert np.allclose(fam.apply(Z, [[1.0, 1.0]])[1], [[1 - 2.0, 1.0]])


def test_rebase():
    const = DerivativeFamily.constant(np.eye(2), np.zeros(2))
    assert const.at_point([1.0, 1.0]).base.tolist() == [1.0, 1.0]
    fam = DerivativeFamily.from_callable(lambda z, u: u, 2, 2, np.zeros(2))
    with pytest.raises(MissingDerivativeError):
        fam.at_point([1.0, 1.0])


@pytest.mark.parametrize("name", names("vep"))
def test_registry_families_pass_diagnostics(name):
    inst = load_example(name)
    fam, x = inst.deriv, inst.reference_point
    assert uniformity_check(inst, fam, x).consistent
    assert strictness_check(inst, fam, x).consistent
    assert equicontinuity_check(fam, inst.z_sample).consistent


def test_compose_rules():
    sep = compose_family("separable", df1=[[1.0, 2.0]], base=np.zeros(2))
    assert np.allclose(sep.matrices(np.zeros((3, 1))), [[[1.0, 2.0]]] * 3)
    fac = compose_family("factorable", alpha=lambda Z: Z[:, 0] ** 2, dg=[[1.0, -1.0]], base=np.zeros(2),
                         Z=np.array([[1.0], [2.0]]))
    assert np.allclose(fac.matrices(np.array([[3.0]]))[0], [[9.0, -9.0]])
    assert not fac.warnings
    loud = compose_family("factorable", alpha=lambda Z: np.exp(50 * Z[:, 0]), dg=[[1.0]], base=np.zeros(1),
                          Z=np.array([[1.0]]))
    assert loud.warnings
    comp = compose_family("composition", inner=sep, inner_values=lambda Z: np.ones((len(Z), 1)),
                          jacobian=lambda Y: 3 * Y[:, :, None])
    assert np.allclose(comp.matrices(np.zeros((1, 1)))[0], [[3.0, 6.0]])
    with pytest.raises(ValueError):
        compose_family("nope")


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_family_homogeneity_property(seed):
    ok, info = props.check_ph_family(np.random.default_rng(seed))
    assert ok, info


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_fd_against_analytic_property(seed):
    ok, info = props.check_fd_vs_analytic(np.random.default_rng(seed))
    assert ok, info


# ---------------------------------------------------------------- Dini derivatives

def _fn(src, structure="generic", n=2):
    return ScalarFn.from_source(src, n, structure)


@pytest.mark.parametrize("src,formula,lip", [
    ("abs(x1) + abs(x2)", lambda w: abs(w[0]) + abs(w[1]), 2 ** 0.5),
    ("max(x1, x2)", lambda w: max(w[0], w[1]), 1.0),
    ("min(x1, -x2)", lambda w: min(w[0], -w[1]), 1.0),
    ("abs(x1 - x2) + 3*x2", lambda w: abs(w[0] - w[1]) + 3 * w[1], 2 ** 0.5 + 3),
])
def test_dini_of_piecewise_linear_functions(src, formula, lip):
    fn = _fn(src)
    # the Hadamard variants perturb the direction inside a ball of radius ball*t, so on
    # the tail levels they can be off by at most ball * t0 * ratio^(levels-tail) * Lipschitz
    dh_tol = 10.0 * 1e-3 * 0.5 ** (20 - 10) * lip * (1 + 1e-9)  # the bound is attained, allow rounding
    for w in sphere_grid(2, 24):
        for mode in ("dini_upper", "dini_lower"):
            assert dini_derivatives(fn, [0, 0], w, mode).value == pytest.approx(formula(w), abs=1e-9)
        for mode in ("dh_upper", "dh_lower"):
            assert dini_derivatives(fn, [0, 0], w, mode).value == pytest.approx(formula(w), abs=dh_tol)


def test_dini_of_sqrt_abs_diverges():
    fn = _fn("sqrt(abs(x1))", n=1)
    assert dini_derivatives(fn, [0.0], [1.0], "dini_lower").value > 1e3


def test_dini_rejects_bad_input():
    fn = _fn("x1")
    with pytest.raises(ValueError):
        dini_many(fn, [0, 0], [[1, 0]], "upper")
    with pytest.raises(ValueError):
        dini_derivatives(fn, [0, 0], [0, 0], "dini_upper")


@settings(max_examples=1000, deadline=None)
@given(SEEDS)
def test_dini_chain_property(seed):
    ok, info = props.check_dini_chain(np.random.default_rng(seed))
    assert ok, info


# ---------------------------------------------------------------- subdifferentials

def test_l1_norm_subdifferentials():
    fn = _fn("abs(x1) + abs(x2)", "convex")
    up = subdiff_candidates(fn, [0, 0], "upper")
    reg = subdiff_candidates(fn, [0, 0], "regular")
    assert up.empty and up.exact
    assert not reg.empty and reg.exact
    assert sorted(map(tuple, reg.points.tolist())) == [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
    assert regular_subdiff_member(fn, [0, 0], [0.3, -0.9])
    assert not regular_subdiff_member(fn, [0, 0], [1.2, 0.0])
    assert not upper_subdiff_member(fn, [0, 0], [0.0, 0.0])


def test_max_regular_subdifferential_is_a_segment():
    fn = _fn("max(x1, x2)", "convex")
    reg = subdiff_candidates(fn, [0, 0], "regular")
    P = reg.points
    assert len(P) >= 2
    assert np.allclose(P.sum(axis=1), 1.0) and np.all(P >= -1e-9)
    assert subdiff_candidates(fn, [0, 0], "upper").empty


def test_concave_mirror():
    fn = _fn("-abs(x1) - abs(x2)", "concave")
    assert subdiff_candidates(fn, [0, 0], "regular").empty
    assert upper_subdiff_member(fn, [0, 0], [0.5, -0.5])
    assert not upper_subdiff_member(fn, [0, 0], [2.0, 0.0])


def test_generic_saddle_has_neither():
    fn = _fn("abs(x1) - abs(x2)")
    assert subdiff_candidates(fn, [0, 0], "upper").empty
    assert subdiff_candidates(fn, [0, 0], "regular").empty


def test_smooth_gives_the_gradient():
    fn = _fn("x1^2 + x2", "smooth")
    for kind in ("upper", "regular"):
        c = subdiff_candidates(fn, [1.0, 0.0], kind)
        assert np.allclose(c.points, [[2.0, 1.0]], atol=1e-6)
    with pytest.raises(ValueError):
        subdiff_candidates(fn, [0, 0], "lower")


def test_scalar_fn_validation():
    with pytest.raises(ValueError):
        ScalarFn.from_source("x1", 1, "wavy")
    with pytest.raises(ValueError):
        ScalarFn.from_source("x1 + z1", 1)
