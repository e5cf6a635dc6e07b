import math
import random

import pytest
from hypothesis import given, strategies as st

from sobmult import expr as ex
from sobmult.catalog import ENTRIES
from sobmult.expr import Const, Div, Func, Neg, Pow, Sub, X

from conftest import central_fd


def test_parse_reciprocal():
    assert ex.parse("1/x") == Div(Const(1.0), X)


def test_parse_sine_of_reciprocal():
    assert ex.parse("sin(1/x)") == Func("sin", Div(Const(1.0), X))


def test_parse_semicircle():
    want = Func("sqrt", Sub(Div(Const(1.0), Const(4.0)), Pow(Sub(X, Div(Const(1.0), Const(2.0))), 2)))
    assert ex.parse("sqrt(1/4-(x-1/2)^2)") == want


def test_power_binds_tighter_than_unary_minus():
    assert ex.parse("-x^2") == Neg(Pow(X, 2))
    assert ex.evaluate(ex.parse("-x^2"), 3.0) == -9.0


def test_left_associative():
    assert ex.evaluate(ex.parse("1-x-x"), 1.0) == -1.0
    assert ex.evaluate(ex.parse("8/x/2"), 2.0) == 2.0


def test_negative_integer_exponent():
    assert ex.evaluate(ex.parse("x^-2"), 2.0) == 0.25
    assert ex.evaluate(ex.parse("x^(-3)"), 2.0) == 0.125


@pytest.mark.parametrize("text,pos", [("sin(1/", 6), ("1+*x", 2), ("x^1.5", 2), ("(x", 2), ("x)", 1)])
def test_syntax_error_position(text, pos):
    with pytest.raises(ex.ExprSyntaxError) as info:
        ex.parse(text)
    assert info.value.position == pos


@pytest.mark.parametrize("text", ["tan(x)", "y", "2*z"])
def test_unknown_identifier(text):
    with pytest.raises(ex.UnknownIdentifierError):
        ex.parse(text)


def test_empty_text_rejected():
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("   ")


def test_token_positions_increase():
    toks = ex.tokenize("sqrt(1/4-(x-1/2)^2)")
    pos = [t.position for t in toks]
    assert pos == sorted(set(pos))
    assert all(t.lexeme for t in toks[:-1])
    assert toks[-1].kind == "end" and toks[-1].lexeme == ""


def test_derivative_power_rule():
    d = ex.differentiate(ex.parse("x^2"))
    for x in (0.0, 0.3, 2.0):
        assert ex.evaluate(d, x) == 2 * x


@pytest.mark.parametrize("text,closed", [
    ("sin(1/x)", lambda x: -math.cos(1 / x) / x ** 2),
    ("exp(1/x)", lambda x: -math.exp(1 / x) / x ** 2),
])
def test_derivative_matches_closed_form_and_fd(text, closed):
    e = ex.parse(text)
    d = ex.differentiate(e)
    r = random.Random(7)
    for _ in range(20):
        x = r.uniform(0.1, 0.9)
        got = ex.evaluate(d, x)
        assert got == pytest.approx(closed(x), rel=1e-12)
        fd = central_fd(lambda t: ex.evaluate(e, t), x)
        assert abs(got - fd) / abs(fd) < 1e-6


def test_evaluate_examples():
    assert ex.evaluate(ex.parse("1/x"), 0.5) == 2.0
    assert ex.evaluate(ex.parse("sqrt(1/4-(x-1/2)^2)"), 0.5) == 0.5
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("1/x"), 0.0)


@pytest.mark.parametrize("text", ["sqrt(x-1)", "log(x)", "x^-1"])
def test_domain_errors(text):
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse(text), 0.0)


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.name)
def test_catalog_round_trip(entry):
    e = ex.parse(entry.text)
    for i in range(1, 101):
        x = i / 101
        want = entry.closed_form(x)
        got = ex.evaluate(e, x)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.name)
def test_catalog_derivatives(entry):
    e = ex.parse(entry.text)
    d = ex.differentiate(e)
    r = random.Random(entry.name)
    for _ in range(20):
        x = r.uniform(0.1, 0.9)
        got = ex.evaluate(d, x)
        fd = central_fd(lambda t: ex.evaluate(e, t), x)
        assert abs(got - fd) / (1 + abs(got)) < 1e-5


def test_parse_is_deterministic():
    for entry in ENTRIES:
        assert ex.parse(entry.text) == ex.parse(entry.text)


_leaf = st.one_of(st.just(X), st.integers(1, 9).map(lambda n: Const(float(n))))


def _grow(children):
    bin_ = st.tuples(st.sampled_from([ex.Add, ex.Sub, ex.Mul]), children, children).map(lambda t: t[0](t[1], t[2]))
    un = st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda t: Func(t[0], t[1]))
    pw = st.tuples(children, st.integers(-3, 3)).map(lambda t: Pow(t[0], t[1]))
    return st.one_of(bin_, un, pw, children.map(Neg))


exprs = st.recursive(_leaf, _grow, max_leaves=8)


@given(exprs, st.floats(0.2, 0.8))
def test_printer_round_trip(e, x):
    back = ex.parse(ex.to_text(e))
    try:
        want = ex.evaluate(e, x)
    except (ex.DomainError, OverflowError):
        return
    got = ex.evaluate(back, x)
    if math.isfinite(want):
        assert got == pytest.approx(want, rel=1e-12, abs=1e-300)


@given(exprs, st.floats(0.2, 0.8))
def test_derivative_property(e, x):
    d = ex.differentiate(e)
    try:
        got = ex.evaluate(d, x)
        fd = central_fd(lambda t: ex.evaluate(e, t), x)
    except (ex.DomainError, OverflowError):
        return
    if math.isfinite(got) and math.isfinite(fd) and abs(got) < 1e6:
        assert abs(got - fd) / (1 + abs(got)) < 1e-4
