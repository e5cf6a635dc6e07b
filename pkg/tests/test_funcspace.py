import math
import random

import mpmath
import pytest

from sobmult import expr as ex, quad
from sobmult.funcspace import (DifferentiableFunction, PiecewiseLinear, constant, format_real, multiply,
                               pl_derivative, pl_from_nodes, pl_square_integral)

from conftest import central_fd

LINE = pl_from_nodes([(0.0, 0.0), (1.0, 1.0)])
QUARTER = pl_from_nodes([(0.25, 1 / 16), (0.5, 0.25)])


def test_interpolation_examples():
    assert LINE(0.5) == 0.5
    assert QUARTER(3 / 8) == pytest.approx(5 / 32, rel=1e-15)
    assert QUARTER(0.6) == 0.0
    assert QUARTER(0.1) == 0.0


def test_exact_at_nodes():
    r = random.Random(1)
    xs = sorted(r.sample(range(1, 10_000), 30))
    xs = [x / 10_000 for x in xs]
    ys = [r.uniform(-5, 5) for _ in xs]
    p = PiecewiseLinear(xs, ys)
    for x, y in zip(xs, ys):
        assert p(x) == y


def test_wide_node_values_are_kept_exactly():
    tiny = mpmath.mpf("1e-100000")
    p = PiecewiseLinear([0.25, 0.5], [tiny, 2 * tiny])
    assert p(0.25) == tiny
    assert p(0.375) == pytest.approx(1.5 * tiny)


def test_validation():
    with pytest.raises(ValueError):
        pl_from_nodes([(0.5, 1.0), (0.25, 2.0)])
    with pytest.raises(ValueError):
        PiecewiseLinear([0.5], [1.0])
    with pytest.raises(ValueError):
        PiecewiseLinear([0.0, 0.5], [1.0])


def test_derivative_examples():
    assert pl_derivative(LINE, 0.3) == 1.0
    assert pl_derivative(QUARTER, 0.3) == pytest.approx(0.75)
    assert pl_derivative(QUARTER, 0.9) == 0.0


def test_breakpoint_derivative_is_right_hand():
    p = pl_from_nodes([(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)])
    assert p.derivative(0.5) == -2.0
    assert p.derivative(0.0) == 2.0
    assert p.derivative(1.0) == 0.0


def test_square_integral_examples():
    assert pl_square_integral(LINE, 0, 1) == pytest.approx(1 / 3, rel=1e-15)
    assert pl_square_integral(pl_from_nodes([(0, 2), (1, 2)]), 0, 1) == pytest.approx(4, rel=1e-15)
    assert pl_square_integral(LINE, 0, 0.5) == pytest.approx(1 / 24, rel=1e-15)
    with pytest.raises(ValueError):
        LINE.square_integral(1, 0)


def test_square_integral_matches_quadrature():
    r = random.Random(2)
    for _ in range(200):
        n = r.randint(2, 8)
        xs = sorted(r.uniform(0, 1) for _ in range(n))
        if any(b - a < 1e-6 for a, b in zip(xs, xs[1:])):
            continue
        p = PiecewiseLinear(xs, [r.uniform(-3, 3) for _ in xs])
        a, b = sorted((r.uniform(-0.1, 1.1), r.uniform(-0.1, 1.1)))
        exact = p.square_integral(a, b)
        pts = sorted({a, b} | {x for x in xs if a < x < b})
        total = mpmath.mpf(0)
        for lo, hi in zip(pts, pts[1:]):
            i = p.segment(0.5 * (lo + hi))
            if i < 0:
                continue
            res = quad.integrate(ex.Pow(p.segment_expr(i), 2), lo, hi, 1e-13)
            assert res.converged
            total += res.value
        assert float(total) == pytest.approx(exact, rel=1e-10, abs=1e-300)


def test_multiply_identity_symbol():
    m = multiply(constant(1.0), LINE)
    for x in (0.1, 0.5, 0.9):
        assert m.value(x) == LINE(x)


def test_multiply_reciprocal_times_line():
    phi = DifferentiableFunction.from_expr("1/x", [0.0])
    p = pl_from_nodes([(0.25, 0.25), (0.5, 0.5)])
    m = multiply(phi, p)
    assert m.value(3 / 8) == pytest.approx(1.0, rel=1e-15)
    for x in (0.26, 0.3, 0.45):
        assert abs(m.derivative(x)) < 1e-14


def test_multiply_derivative_matches_fd():
    phi = DifferentiableFunction.from_expr("sin(1/x)", [0.0])
    r = random.Random(3)
    xs = [0.05, 0.2, 0.4, 0.7, 0.95]
    p = PiecewiseLinear(xs, [r.uniform(0.5, 2) for _ in xs])
    for weight in (False, True):
        m = multiply(phi, p, weight)
        g = m.as_function()
        for _ in range(20):
            x = r.uniform(0.06, 0.94)
            if min(abs(x - b) for b in xs) < 1e-4:
                continue
            want = float(m.derivative(x))
            fd = central_fd(lambda t: float(m.value(t)), x)
            assert abs(want - fd) / (1 + abs(want)) < 1e-5
            assert g.derivative(x) == pytest.approx(want, rel=1e-9, abs=1e-12)
            assert g.value(x) == pytest.approx(float(m.value(x)), rel=1e-12)


def test_weighted_product_vanishes_at_endpoints():
    m = multiply(DifferentiableFunction.from_expr("1/x", [0.0]), LINE, weight=True)
    assert m.endpoint_values() == (0, 0)


def test_differentiable_function_pieces():
    f = DifferentiableFunction.from_expr("x^2", lo=0.25, hi=0.5)
    assert f(0.1) == 0.0
    assert f(0.3) == pytest.approx(0.09)
    assert f.derivative(0.3) == pytest.approx(0.6)
    assert f(0.5) == 0.25  # closed at the last piece's right end
    with pytest.raises(ValueError):
        DifferentiableFunction.from_expr("x", singularities=[2.0])


def test_value_wide_beyond_binary64():
    f = DifferentiableFunction.from_expr("exp(1/x)", [0.0])
    v = f.value_wide(1e-3)
    assert mpmath.log(v) == pytest.approx(1000.0, rel=1e-12)
    with pytest.raises(ex.DomainError):
        f.value_wide(0.0)


def test_csv_has_header_and_crlf():
    text = QUARTER.to_csv()
    lines = text.split("\r\n")
    assert lines[0] == "x,y"
    assert lines[1] == "0.25,0.0625"
    assert text.endswith("\r\n")


def test_format_real():
    assert format_real(0.1) == "0.1"
    assert format_real(mpmath.mpf(0.5)) == "0.5"
    wide = format_real(mpmath.mpf("1e-100000"))
    assert "e-10000" in wide and mpmath.mpf(wide) == mpmath.mpf("1e-100000")
    assert math.isclose(float(format_real(mpmath.mpf(2) / 3)), 2 / 3)
