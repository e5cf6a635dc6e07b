"""Inner product, reproducing kernel and membership tests for W^{1,2}[0,1] and W_0."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from . import expr as ex
from . import quad
from .funcspace import DifferentiableFunction, Piece, ProductFunction

ENDPOINT_TOL = 1e-9
#: dyadic grading depth used when membership needs a split toward the endpoints
GRADING_DEPTH = 40

_SINH1 = math.sinh(1.0)


class DivergenceSuspected(ArithmeticError):
    """An integral that was required to be finite did not converge."""

    def __init__(self, result: quad.QuadratureResult, what: str = "integral"):
        super().__init__(f"{what} did not converge ({result.status})")
        self.result = result


def _overlaps(f: DifferentiableFunction, g: DifferentiableFunction):
    pts = sorted(set(f.breakpoints) | set(g.breakpoints) | set(f.singularities) | set(g.singularities))
    for lo, hi in zip(pts, pts[1:]):
        mid = 0.5 * (lo + hi)
        pf, pg = f.piece_at(mid), g.piece_at(mid)
        if pf is not None and pg is not None:
            yield lo, hi, pf, pg


def inner_product_result(f: DifferentiableFunction, g: DifferentiableFunction,
                         tol: float = quad.DEFAULT_TOL) -> quad.QuadratureResult:
    parts = []
    for lo, hi, pf, pg in _overlaps(f, g):
        integrand = ex.Add(ex.Mul(pf.expr, pg.expr), ex.Mul(pf.dexpr, pg.dexpr))
        # |∫ fg + f'g'| <= sqrt(E_f E_g) sets the scale for cancelling integrands
        ef = quad.integrate(quad.energy_density(pf), lo, hi, tol)
        eg = quad.integrate(quad.energy_density(pg), lo, hi, tol)
        scale = float(mpmath.sqrt(ef.value * eg.value)) if ef.converged and eg.converged else 0.0
        parts.append(quad.integrate(integrand, lo, hi, tol, abs_tol=tol * scale))
    return quad.combine(parts)


def inner_product(f: DifferentiableFunction, g: DifferentiableFunction, tol: float = quad.DEFAULT_TOL):
    """``⟨f, g⟩ = ∫_0^1 f g + f' g'`` (real-valued functions)."""
    r = inner_product_result(f, g, tol)
    if not r.converged:
        raise DivergenceSuspected(r, "inner product")
    return r.value


def norm(f: DifferentiableFunction, tol: float = quad.DEFAULT_TOL):
    return mpmath.sqrt(inner_product(f, f, tol))


# -- reproducing kernel ------------------------------------------------------


def kernel_value(x: float, y: float) -> float:
    """``k_x(y) = cosh(min(x, y)) cosh(1 - max(x, y)) / sinh(1)``."""
    lo, hi = (x, y) if x <= y else (y, x)
    return math.cosh(lo) * math.cosh(1.0 - hi) / _SINH1


def _cosh(u: ex.Expr) -> ex.Expr:
    return ex.Div(ex.Add(ex.Func("exp", u), ex.Func("exp", ex.Neg(u))), ex.Const(2.0))


def kernel_function(x: float) -> DifferentiableFunction:
    """``y ↦ k_x(y)`` with its a.e. derivative; a kink at ``y = x``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    pieces = []
    if x > 0.0:
        left = ex.Mul(ex.Const(math.cosh(1.0 - x) / _SINH1), _cosh(ex.X))
        pieces.append(Piece(0.0, x, left, ex.differentiate(left)))
    if x < 1.0:
        right = ex.Mul(ex.Const(math.cosh(x) / _SINH1), _cosh(ex.Sub(ex.Const(1.0), ex.X)))
        pieces.append(Piece(x, 1.0, right, ex.differentiate(right)))
    return DifferentiableFunction(pieces, name=f"k_{x!r}")


# -- membership --------------------------------------------------------------


@dataclass(frozen=True)
class MembershipReport:
    interval: tuple[float, float]
    energy: quad.QuadratureResult
    member: bool
    endpoint_values: tuple | None = None
    pieces: tuple = field(default=(), repr=False)

    @property
    def energy_value(self):
        """The energy, or ``None`` when divergence is suspected."""
        return self.energy.value if self.energy.bounded else None


def _graded_points(a: float, b: float, depth: int) -> list[float]:
    w = b - a
    pts = {a, b}
    for k in range(1, depth + 1):
        pts.add(a + w * math.ldexp(1.0, -k))
        pts.add(b - w * math.ldexp(1.0, -k))
    return sorted(p for p in pts if a <= p <= b)


def is_member(f: DifferentiableFunction, a: float, b: float, tol: float = quad.DEFAULT_TOL) -> MembershipReport:
    """Is ``f`` in W^{1,2}[a, b]?  Decided by finiteness of its Sobolev energy.

    A direct quadrature is tried first; if it does not converge the interval is
    graded dyadically toward both ends and each cell is integrated or enclosed.
    """
    if a > b:
        raise ValueError("need a <= b")
    direct = quad.sobolev_energy(f, a, b, tol, max_subdiv=quad.CELL_BUDGET)
    if direct.converged:
        return MembershipReport((a, b), direct, True)
    pts = _graded_points(a, b, GRADING_DEPTH)
    parts = tuple(quad.cell_energy(f, lo, hi, tol) for lo, hi in zip(pts, pts[1:]))
    total = quad.combine(parts)
    return MembershipReport((a, b), total, total.bounded, pieces=parts)


def _endpoint_values(f):
    if isinstance(f, ProductFunction):
        return f.endpoint_values()
    vals = []
    for x in (0.0, 1.0):
        try:
            vals.append(f.value(x))
        except ex.DomainError:
            vals.append(None)
    return tuple(vals)


def is_member_w0(f, tol: float = quad.DEFAULT_TOL, endpoint_tol: float = ENDPOINT_TOL) -> MembershipReport:
    """Is ``f`` in W_0: finite energy on [0, 1] and ``f(0) = f(1) = 0``?

    Node-backed products use their exact endpoint values; other functions
    must vanish within ``endpoint_tol``.
    """
    g = f.as_function() if isinstance(f, ProductFunction) else f
    rep = is_member(g, 0.0, 1.0, tol)
    ends = _endpoint_values(f)
    if isinstance(f, ProductFunction):
        vanish = all(v == 0 for v in ends)
    else:
        vanish = all(v is not None and abs(v) <= endpoint_tol for v in ends)
    return MembershipReport((0.0, 1.0), rep.energy, rep.member and vanish, ends, rep.pieces)
