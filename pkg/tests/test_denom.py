import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from sobmult import denom as D, quad
from sobmult.funcspace import DifferentiableFunction as DF

from conftest import denominator, product_le_one


def check_inequalities(a, b):
    for n in range(len(a)):
        an = max(mpmath.mpf(a[n]), D.A_FLOOR)
        assert 0 < b[n] <= 1
        assert product_le_one(an, b[n])
        if n + 1 < len(b):
            assert product_le_one(an, b[n + 1])


def test_exact_product_check():
    assert product_le_one(3, mpmath.fdiv(1, 3, rounding="d"))
    assert not product_le_one(3, mpmath.fdiv(1, 3, rounding="u"))
    assert product_le_one(mpmath.mpf(2) ** 5000, mpmath.mpf(2) ** -5000)
    assert not product_le_one(mpmath.mpf(2) ** 5000 + mpmath.mpf(2) ** 4990, mpmath.mpf(2) ** -5000)


def test_b_examples():
    assert D.b_sequence([2, 8, 32]).values == (0.5, 0.125, 0.03125)
    assert D.b_sequence([0.25, 0.125]).values == (1, 1)
    prof = quad.dyadic_profile(DF.from_expr("1/x", [0]), "left", 3)
    b = D.b_sequence(prof)
    assert float(b[0]) == pytest.approx(3 / 62, rel=1e-14)


def test_b_errors():
    with pytest.raises(ValueError):
        D.b_sequence([])
    with pytest.raises(ValueError):
        D.b_sequence([1, mpmath.inf])


def test_b_floor_for_vanishing_cells():
    assert D.b_sequence([0, 0.0, 1e-320]).values == (1, 1, 1)


def test_b_inequalities_random_profiles():
    r = random.Random(1234)
    for _ in range(1000):
        n = r.randint(1, 40)
        a = [mpmath.mpf(10) ** r.uniform(-30, 30) for _ in range(n)]
        check_inequalities(a, D.b_sequence(a))


@settings(max_examples=200)
@given(st.lists(st.floats(1e-300, 1e300), min_size=1, max_size=30))
def test_b_inequalities_property(a):
    check_inequalities(a, D.b_sequence(a))


def test_b_inequalities_extended_range():
    a = [mpmath.exp(mpmath.mpf(2) ** (n + 2)) for n in range(1, 41)]
    check_inequalities(a, D.b_sequence(a))


def test_interpolant_all_ones_matches_square():
    b = D.BSequence((mpmath.mpf(1),) * 10)
    p = D.left_interpolant(b, 10)
    assert p.breakpoints[0] == 2.0 ** -11 and p.breakpoints[-1] == 0.5
    for x, y in zip(p.breakpoints, p.values):
        assert y == mpmath.mpf(x) ** 2
    with pytest.raises(ValueError):
        D.left_interpolant(b, 9)


def test_interpolant_slopes_and_continuity():
    r = random.Random(8)
    b = D.BSequence(tuple(mpmath.mpf(r.uniform(0.01, 1)) for _ in range(12)))
    p = D.left_interpolant(b)
    for n in range(1, 12):
        lo, hi = 2.0 ** -(n + 1), 2.0 ** -n
        i = p.segment(0.5 * (lo + hi))
        assert p.slope(i) == pytest.approx((4 * b[n - 1] - b[n]) / 2 ** (n + 1), rel=1e-14)
        assert p(lo) == b[n] * mpmath.mpf(4) ** -(n + 1)
        for _ in range(10):
            x = r.uniform(lo, hi)
            assert p(x) == pytest.approx(D.piece_formula(b, n, x), rel=1e-13)


def test_interpolant_positive():
    r = random.Random(3)
    for _ in range(50):
        b = D.BSequence(tuple(mpmath.mpf(10) ** -r.uniform(0, 200) for _ in range(20)))
        assert all(v > 0 for v in D.left_interpolant(b).values)


def test_trivial_branch():
    res = D.build_denominator(DF.from_expr("x"))
    assert res.trivial
    for x in (0.1, 0.5, 0.8):
        assert float(res.d.value(x)) == pytest.approx(x * (1 - x), rel=1e-15)
    assert res.certificate.valid


def test_constant_symbol_certificate():
    res = D.build_denominator(DF.from_expr("1"))
    c = res.certificate
    assert c.valid and c.energy_phi_d == pytest.approx(float(c.energy_d), rel=1e-12)


def test_reciprocal_denominator():
    res = denominator("pole")
    c = res.certificate
    assert not res.trivial and c.valid, c.failed
    assert c.endpoint_values == (0, 0)
    # node heights on the left are b_n 4^-n with b_n = min(1/a_n, 1/a_(n-1), 1), up to the glue factor
    a = [2 ** n + Fraction(7, 3) * 8 ** n for n in range(1, 8)]
    ys = res.side_nodes("left")
    scale = res.glue["factor"] if res.glue["scaled"] == "left" else 1
    for n in range(2, 8):
        want = min(1 / a[n - 1], 1 / a[n - 2]) / Fraction(4) ** n
        assert float(ys[n - 1] / scale) == pytest.approx(float(want), rel=1e-8)
    tails = c.tail_ratios["left"][-5:]
    assert all(t <= 1 / 16 + 1e-9 for t in tails)


def test_d_positive_at_interior_breakpoints():
    res = denominator("pole")
    for x in res.f.breakpoints:
        assert res.d.value(x) > 0


def test_refused_for_interior_pole():
    with pytest.raises(D.ConstructionRefused) as info:
        D.build_denominator(DF.from_expr("1/(x-1/2)", [0.5]), depth=8)
    assert info.value.cell in ((0.25, 0.5), (0.5, 0.75))


@pytest.mark.parametrize("c", [0.1, 1, 10])
@pytest.mark.parametrize("text", ["1/x", "exp(1/x)"])
def test_scaling_robustness(text, c):
    res = D.build_denominator(DF.from_expr(text, [0]).scaled(c), depth=24)
    assert res.certificate.valid, res.certificate.failed


def test_majorant_checks_per_cell():
    res = denominator("essential")
    for side in ("left", "right"):
        checks = res.certificate.majorant_checks[side]
        assert len(checks) == 40 and all(ch["ok"] for ch in checks)


def test_sample_grid_log_dense_and_symmetric():
    g = D.sample_grid(40)
    assert len(g) == 4096
    assert g[0] == 2.0 ** -41 and g == sorted(g)
    assert g[1] - g[0] < 1e-13
    assert all(abs(a + b - 1) < 1e-15 for a, b in zip(g, reversed(g)))
