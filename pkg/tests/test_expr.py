from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgfrac.errors import EvalError, MultipleVariablesError, ParseError, UnsupportedError
from wgfrac.expr import (
    Add,
    Call,
    Mul,
    Num,
    Pow,
    Var,
    differentiate,
    evaluate,
    parse,
    to_text,
    variable_of,
)


def test_literal():
    assert parse("1") == Num(1.0)


def test_tree_shape():
    assert parse("exp(x) * (1 + x^2)") == Mul(Call("exp", Var()), Add(Num(1), Pow(Var(), Num(2))))


def test_unary_plus_rejected_at_offset():
    with pytest.raises(ParseError) as info:
        parse("2*+x")
    assert info.value.offset == 2


@pytest.mark.parametrize("text,offset", [("", 0), ("(x", 2), ("x)", 1), ("foo(x)", 0), ("1..2", 2)])
def test_parse_errors(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset


def test_offsets_are_bytes():
    with pytest.raises(ParseError) as info:
        parse("x + é")
    assert info.value.offset == 4


def test_multiple_variables():
    with pytest.raises(MultipleVariablesError):
        parse("x + t")
    assert variable_of(parse("t^2")) == "t"
    assert variable_of(parse("2")) is None


def test_precedence():
    assert evaluate(parse("-x^2"), 3.0) == -9.0
    assert evaluate(parse("2^3^2"), 0.0) == 512.0
    assert evaluate(parse("1 - 2 - 3"), 0.0) == -4.0
    assert evaluate(parse("8 / 4 / 2"), 0.0) == 1.0


def test_eval_examples():
    assert evaluate(parse("x^2"), 3.0) == 9.0
    assert abs(evaluate(parse("sin(pi)"), 0.7)) <= 1e-15
    with pytest.raises(EvalError):
        evaluate(parse("1/x"), 0.0)


@pytest.mark.parametrize("text,x", [("log(x)", 0.0), ("sqrt(x)", -1.0), ("x^0.5", -1.0), ("exp(x)", 1e4)])
def test_eval_domain(text, x):
    with pytest.raises(EvalError):
        evaluate(parse(text), x)


def test_eval_vectorized():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(evaluate(parse("x^2 + 1"), x), x**2 + 1)
    np.testing.assert_allclose(evaluate(parse("3"), x), 3 * np.ones(5))


def test_derivative_examples():
    assert to_text(differentiate(parse("x^2"))) == "2 * x"
    d = differentiate(parse("exp(2*x)"))
    assert d == parse("2 * exp(2 * x)")


def test_derivative_abs_unsupported():
    with pytest.raises(UnsupportedError):
        differentiate(parse("abs(x)"))


# random smooth expressions on x in [0.5, 2]
_leaf = st.one_of(
    st.just("x"),
    st.integers(1, 5).map(str),
    st.sampled_from(["0.5", "1.5", "pi"]),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
            lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(children, children).map(lambda t: f"({t[0]}) / (2 + ({t[1]})^2)"),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda c: f"exp(sin({c}))"),
        children.map(lambda c: f"sqrt(1 + ({c})^2)"),
        children.map(lambda c: f"log(2 + cos({c}))"),
        st.tuples(children, st.integers(2, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda c: f"-{c}"),
    )


exprs = st.recursive(_leaf, _extend, max_leaves=6)


@settings(max_examples=100, deadline=None)
@given(exprs, st.floats(0.5, 2.0))
def test_derivative_matches_central_difference(text, x):
    e = parse(text)
    h = 1e-5
    fd = (evaluate(e, x + h) - evaluate(e, x - h)) / (2 * h)
    exact = evaluate(differentiate(e), x)
    scale = max(1.0, abs(evaluate(e, x)), abs(exact))
    assert abs(exact - fd) <= 1e-6 * scale


@settings(max_examples=100, deadline=None)
@given(exprs, st.floats(0.5, 2.0))
def test_print_parse_round_trip(text, x):
    e = parse(text)
    again = parse(to_text(e))
    assert again == e or math.isclose(evaluate(again, x), evaluate(e, x), rel_tol=1e-14, abs_tol=1e-14)
