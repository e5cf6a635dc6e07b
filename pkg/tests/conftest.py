import functools
import random

import mpmath

import pytest

from sobmult import denom
from sobmult.catalog import CATALOG

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def denominator(name: str, depth: int = denom.DEFAULT_DEPTH):
    return denom.build_denominator(CATALOG[name].function(), depth)


@pytest.fixture
def rng():
    return random.Random(20240611)


def central_fd(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def product_le_one(u, v) -> bool:
    """Exact ``u * v <= 1`` for positive mpf values, without building huge rationals."""
    mu, eu = mpmath.mpf(u).man_exp
    mv, ev = mpmath.mpf(v).man_exp
    p, e = mu * mv, eu + ev
    if e >= 0:
        return e == 0 and p == 1
    # p * 2^e <= 1  iff  p <= 2^-e
    if p.bit_length() <= -e:
        return True
    return p.bit_length() == -e + 1 and p == 1 << -e
