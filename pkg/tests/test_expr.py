import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from vepcone.expr import ExprDomainError, ExprSyntaxError, eval_vector, parse, parse_expr, to_source

EX31_F1 = "0.5*(-(1 - 1/(norm2(z1,z2)^2+1))*x1 + x2 + 1)^2"


# ---------------------------------------------------------------- worked values

def test_simple_arithmetic():
    e = parse("x1 + z1*x2")
    assert (e.n_x, e.n_z) == (2, 1)
    assert eval_vector(e, x=[1, 2], z=[3]) == pytest.approx([7.0])


def test_ex31_first_component_at_origin():
    e = parse(EX31_F1)
    assert eval_vector(e, x=[0, 0], z=[0, 0])[0] == pytest.approx(0.5)


@pytest.mark.parametrize("z", [[0, 0], [3, -4], [10, 0], [-0.1, 7]])
def test_ex31_f_at_origin_is_half_half(z):
    m = "1/(norm2(z1,z2)^2+1)"
    e = parse([f"0.5*(-(1 - {m})*x1 + x2 + 1)^2", f"0.5*((1 + {m})*x1 - x2 + 1)^2"])
    assert eval_vector(e, x=[0, 0], z=z) == pytest.approx([0.5, 0.5])


def test_ex32_values():
    e = parse("x1^2*z1/(z1^2+1)")
    assert eval_vector(e, x=[2], z=[1])[0] == pytest.approx(2.0)
    assert eval_vector(e, x=[1], z=[-1])[0] == pytest.approx(-0.5)


def test_constant_vector():
    e = parse("1;2")
    assert e.dim == 2
    assert eval_vector(e).tolist() == [1.0, 2.0]


@pytest.mark.parametrize("src,val", [
    ("-2^2", -4.0),
    ("2^3^2", 512.0),
    ("2*3+4", 10.0),
    ("2+3*4", 14.0),
    ("8/2/2", 2.0),
    ("(-2)^2", 4.0),
    ("2^-1", 0.5),
    ("norm2(3,4)", 5.0),
    ("min(1, max(2, 3))", 1.0),
    ("1e-3*1000", 1.0),
])
def test_precedence_and_functions(src, val):
    assert eval_vector(parse(src))[0] == pytest.approx(val)


# ---------------------------------------------------------------- errors

@pytest.mark.parametrize("src,col", [("x1 +* 2", 5), ("x1 + ", 6), ("(x1", 4), ("x1 $ 2", 4)])
def test_syntax_error_columns(src, col):
    with pytest.raises(ExprSyntaxError) as ei:
        parse(src)
    assert ei.value.col == col
    assert f"column {col}" in str(ei.value)


def test_syntax_error_line():
    with pytest.raises(ExprSyntaxError) as ei:
        parse("x1 +\n  * 2")
    assert ei.value.line == 2


@pytest.mark.parametrize("src", ["y1 + 1", "sin(x1)", "x0", "min(x1)", "abs(x1, x2)", "norm2()"])
def test_unknown_identifiers_and_arity(src):
    with pytest.raises(ExprSyntaxError):
        parse(src)


def test_declared_arity_is_enforced():
    with pytest.raises(ExprSyntaxError):
        parse("x3", n_x=2)


@pytest.mark.parametrize("src,x", [("1; 1/x1", [0.0]), ("1; log(x1)", [0.0]), ("1; sqrt(x1)", [-1.0])])
def test_domain_error_carries_component(src, x):
    e = parse(src)
    with pytest.raises(ExprDomainError) as ei:
        eval_vector(e, x=x)
    assert ei.value.component == 1


def test_domain_error_index_in_batch():
    e = parse("1/x1")
    with pytest.raises(ExprDomainError) as ei:
        e.evaluate_batch({"x": [np.array([1.0, 2.0, 0.0, 3.0])], "z": [], "u": []})
    assert ei.value.index == (2,)


def test_overflow_is_a_domain_error():
    with pytest.raises(ExprDomainError):
        eval_vector(parse("exp(x1)"), x=[1e4])


def test_u_supplied_iff_used():
    e = parse("u1 + x1", n_x=1, n_u=1)
    with pytest.raises(ValueError):
        eval_vector(e, x=[1.0])
    with pytest.raises(ValueError):
        eval_vector(parse("x1"), x=[1.0], u=[1.0])


def test_wrong_vector_length():
    with pytest.raises(ValueError):
        eval_vector(parse("x1 + x2"), x=[1.0])


# ---------------------------------------------------------------- properties

def _leaf():
    return st.one_of(
        st.floats(0, 50, allow_nan=False).map(lambda v: (repr(v), repr(v))),
        st.sampled_from([("x1", "x1"), ("x2", "x2"), ("z1", "z1")]),
    )


def _extend(children):
    binop = st.tuples(children, st.sampled_from("+-*/"), children).map(
        lambda t: (f"({t[0][0]} {t[1]} {t[2][0]})", f"({t[0][1]} {t[1]} {t[2][1]})"))
    neg = children.map(lambda c: (f"-({c[0]})", f"-({c[1]})"))
    func = st.tuples(st.sampled_from(["abs", "sqrt", "exp", "log"]), children).map(
        lambda t: (f"{t[0]}({t[1][0]})", f"_{t[0]}({t[1][1]})"))
    binf = st.tuples(st.sampled_from(["min", "max", "norm2"]), children, children).map(
        lambda t: (f"{t[0]}({t[1][0]}, {t[2][0]})", f"_{t[0]}({t[1][1]}, {t[2][1]})"))
    power = st.tuples(children, st.integers(0, 3)).map(
        lambda t: (f"({t[0][0]})^{t[1]}", f"({t[0][1]})**{t[1]}"))
    return st.one_of(binop, neg, func, binf, power)


EXPRS = st.recursive(_leaf(), _extend, max_leaves=12)

_PY = {"_abs": abs, "_sqrt": math.sqrt, "_exp": math.exp, "_log": math.log,
       "_min": min, "_max": max, "_norm2": lambda a, b: math.sqrt(a * a + b * b)}


def _py_eval(src, x, z):
    env = dict(_PY, x1=x[0], x2=x[1], z1=z[0])
    try:
        v = eval(src, {"__builtins__": {}}, env)
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    return v if math.isfinite(v) else None


POINT = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=1000, deadline=None)
@given(EXPRS, st.tuples(POINT, POINT), st.tuples(POINT))
def test_fuzz_against_python_and_round_trip(pair, x, z):
    dsl, py = pair
    e = parse(dsl, n_x=2, n_z=1)
    expected = _py_eval(py, x, z)
    try:
        got = eval_vector(e, x=x, z=z)[0]
    except ExprDomainError:
        got = None
    # both evaluators reject exactly the same inputs
    assert (expected is None) == (got is None), (dsl, x, z, expected, got)
    if got is None:
        return
    assert got == pytest.approx(expected, rel=1e-9, abs=1e-9)
    again = parse(to_source(e.components[0]), n_x=2, n_z=1)
    assert again.components == e.components
    assert eval_vector(again, x=x, z=z)[0] == got


PH_MAPS = ["abs(u1) + 2*max(u2, 0)*z1^2", "min(u1, -u2) - 3*u2", "norm2(u1, u2)*exp(z1)"]


@settings(max_examples=1000, deadline=None)
@given(st.sampled_from(PH_MAPS), st.floats(0, 2 * math.pi), st.sampled_from([0.5, 2.0, 10.0]), POINT)
def test_homogeneity_in_u(src, theta, t, z1):
    e = parse(src, n_z=1, n_u=2)
    u = np.array([math.cos(theta), math.sin(theta)])
    a = eval_vector(e, z=[z1], u=t * u)[0]
    b = t * eval_vector(e, z=[z1], u=u)[0]
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


def test_parse_expr_single():
    assert to_source(parse_expr("x1+1")) == "(x1+1.0)"
