"""Adaptive quadrature, Sobolev energies and dyadic energy profiles.

Integrals run in the kernel backend: globally adaptive 7/15-point
Gauss-Kronrod, an open rule that never samples the interval endpoints, with
extended-exponent accumulation.  Non-convergence is reported through
``QuadratureResult.status`` rather than raised.

Cells whose integrand cannot be resolved within the subdivision budget (deep
oscillation, ill-conditioned evaluation) fall back to an interval-arithmetic
enclosure, which bounds the energy from above and marks the result
``"enclosed"``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath

from . import _backend
from . import _xcore_py
from . import expr as ex
from .expr import Expr
from .funcspace import DifferentiableFunction, Piece, wide

DEFAULT_TOL = 1e-9
DEFAULT_MAX_SUBDIV = 10**6
#: subdivision budget for one dyadic cell before falling back to an enclosure
CELL_BUDGET = 2000
ENCLOSURE_BOXES = 16

_STATUS = {
    _xcore_py.ST_OK: "converged",
    _xcore_py.ST_MAXSUB: "max-subdivisions",
    _xcore_py.ST_DOMAIN: "domain-error",
    _xcore_py.ST_OVERFLOW: "overflow",
    _xcore_py.ST_ROUNDOFF: "roundoff-limit",
}
_SEVERITY = ["converged", "enclosed", "roundoff-limit", "max-subdivisions", "overflow", "domain-error"]


def max_subdivisions() -> int:
    v = os.environ.get("SOBMULT_MAX_SUBDIV")
    return int(v) if v else DEFAULT_MAX_SUBDIV


@dataclass(frozen=True)
class QuadratureResult:
    value: mpmath.mpf
    error_estimate: mpmath.mpf
    subdivisions: int
    status: str = "converged"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def bounded(self) -> bool:
        """Finite value known: converged, or enclosed by a finite upper bound."""
        return self.status in ("converged", "enclosed") and bool(mpmath.isfinite(self.value))

    @property
    def divergence_suspected(self) -> bool:
        return not self.bounded

    def __float__(self):
        return float(self.value)


ZERO = QuadratureResult(mpmath.mpf(0), mpmath.mpf(0), 1)


def combine(results: Sequence[QuadratureResult]) -> QuadratureResult:
    """Sum of partial results; the status is the worst of the parts."""
    if not results:
        return ZERO
    value = mpmath.fsum(r.value for r in results)
    err = mpmath.fsum(r.error_estimate for r in results)
    status = max((r.status for r in results), key=_SEVERITY.index)
    return QuadratureResult(value, err, sum(r.subdivisions for r in results), status)


def _from_raw(raw) -> QuadratureResult:
    vm, ve, em, ee, n, st = raw
    return QuadratureResult(wide(vm, ve), wide(em, ee), int(n), _STATUS[st])


class _Faulting:
    def __init__(self, f):
        self.f = f

    def __call__(self, x):
        try:
            v = float(self.f(x))
        except (ex.DomainError, ZeroDivisionError, ValueError):
            raise _xcore_py._Fault(_xcore_py.ST_DOMAIN)
        except OverflowError:
            raise _xcore_py._Fault(_xcore_py.ST_OVERFLOW)
        if not math.isfinite(v):
            raise _xcore_py._Fault(_xcore_py.ST_OVERFLOW)
        return _xcore_py.from_double(v)


def integrate(f: Expr | Callable[[float], float], a: float, b: float, tol: float = DEFAULT_TOL,
              max_subdiv: int | None = None, abs_tol: float = 0.0) -> QuadratureResult:
    """``∫_a^b f`` to relative tolerance ``tol``.

    ``f`` is an expression (evaluated by the kernel backend) or a Python
    callable returning floats (evaluated by the pure-Python integrator).
    ``abs_tol`` is an absolute floor for integrals that may vanish.
    """
    if a > b:
        raise ValueError("need a <= b")
    if max_subdiv is None:
        max_subdiv = max_subdivisions()
    if a == b:
        return ZERO
    if isinstance(f, Expr):
        return _from_raw(_backend.integrate_program(ex.compile_expr(f), a, b, tol, max_subdiv, abs_tol))
    return _from_raw(_xcore_py.adapt(_Faulting(f), float(a), float(b), float(tol), int(max_subdiv), float(abs_tol)))


def energy_density(piece: Piece) -> Expr:
    return ex.Add(ex.Pow(piece.expr, 2), ex.Pow(piece.dexpr, 2))


def _split_points(phi: DifferentiableFunction, a: float, b: float) -> list[float]:
    pts = {a, b}
    pts.update(s for s in phi.singularities if a < s < b)
    pts.update(x for x in phi.breakpoints if a < x < b)
    return sorted(pts)


def _pieces(phi: DifferentiableFunction, a: float, b: float) -> list[Piece]:
    pts = _split_points(phi, a, b)
    out = []
    for lo, hi in zip(pts, pts[1:]):
        out.extend(phi.restrict(lo, hi))
    return out


def sobolev_energy(phi: DifferentiableFunction, a: float, b: float, tol: float = DEFAULT_TOL,
                   max_subdiv: int | None = None) -> QuadratureResult:
    """``∫_a^b |φ|² + |φ'|²``, split at pieces and declared singularities."""
    if a > b:
        raise ValueError("need a <= b")
    return combine([integrate(energy_density(p), p.lo, p.hi, tol, max_subdiv) for p in _pieces(phi, a, b)])


def _sup_sq(e: Expr, lo: float, hi: float):
    box = ex.enclose(e, lo, hi)
    top = max(abs(box.a), abs(box.b))
    return mpmath.mpf(top) ** 2


def enclose_integral(integrands: Sequence[Expr], lo: float, hi: float, boxes: int = ENCLOSURE_BOXES):
    """Upper bound of ``∫_lo^hi Σ |g|²`` over the given expressions (mpf, possibly inf)."""
    total = mpmath.mpf(0)
    w = (hi - lo) / boxes
    for k in range(boxes):
        u = lo + k * w
        v = hi if k == boxes - 1 else lo + (k + 1) * w
        sup = mpmath.fsum(_sup_sq(g, u, v) for g in integrands)
        if not mpmath.isfinite(sup):
            return mpmath.inf
        total += sup * (v - u)
    # guard the final binary64-width products against rounding down
    return total * (1 + mpmath.mpf(2) ** -40)


def robust_integral(integrands: Sequence[Expr], lo: float, hi: float, tol: float = DEFAULT_TOL,
                    budget: int = CELL_BUDGET) -> QuadratureResult:
    """``∫ Σ |g|²`` by quadrature, or by enclosure when quadrature cannot converge.

    An enclosed result carries the upper bound as ``value`` and the width of
    the bracket ``[0, bound]`` as ``error_estimate``.
    """
    sq = [ex.Pow(g, 2) for g in integrands]
    density = sq[0]
    for s in sq[1:]:
        density = ex.Add(density, s)
    res = integrate(density, lo, hi, tol, budget)
    if res.converged:
        return res
    bound = enclose_integral(integrands, lo, hi)
    if mpmath.isfinite(bound):
        return QuadratureResult(bound, bound, res.subdivisions, "enclosed")
    return res


def cell_energy(phi: DifferentiableFunction, a: float, b: float, tol: float = DEFAULT_TOL,
                budget: int = CELL_BUDGET) -> QuadratureResult:
    """Sobolev energy of one cell with the enclosure fallback, per piece."""
    return combine([robust_integral([p.expr, p.dexpr], p.lo, p.hi, tol, budget) for p in _pieces(phi, a, b)])


# -- dyadic profiles ---------------------------------------------------------


def dyadic_cell(n: int, side: str) -> tuple[float, float]:
    """The n-th dyadic cell next to endpoint 0 (``left``) or its mirror next to 1 (``right``)."""
    lo, hi = math.ldexp(1.0, -(n + 1)), math.ldexp(1.0, -n)
    if side == "left":
        return lo, hi
    if side == "right":
        return 1.0 - hi, 1.0 - lo
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


@dataclass(frozen=True)
class DyadicProfile:
    side: str
    depth: int
    energies: tuple
    results: tuple = field(repr=False, default=())

    def cell(self, n: int) -> tuple[float, float]:
        return dyadic_cell(n, self.side)

    @property
    def bounded(self) -> bool:
        return all(r.bounded for r in self.results)

    def to_csv(self) -> str:
        from .funcspace import format_real

        lines = ["n,a_n,status"]
        for n, (a, r) in enumerate(zip(self.energies, self.results), start=1):
            lines.append(f"{n},{format_real(a)},{r.status}")
        return "\r\n".join(lines) + "\r\n"


def dyadic_profile(phi: DifferentiableFunction, side: str, depth: int, tol: float = DEFAULT_TOL,
                   budget: int = CELL_BUDGET) -> DyadicProfile:
    """Energies ``a_n`` of φ over the dyadic cells n = 1..depth of one endpoint."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    results = tuple(cell_energy(phi, *dyadic_cell(n, side), tol=tol, budget=budget) for n in range(1, depth + 1))
    return DyadicProfile(side, depth, tuple(r.value for r in results), results)


# -- divergence probe --------------------------------------------------------


@dataclass(frozen=True)
class ProbeResult:
    point: float
    side: str
    verdict: str  # finite | divergent | inconclusive
    increments: tuple
    energies: tuple
    ratios: tuple
    threshold: float
    results: tuple = field(repr=False, default=())


def _probe_cells(point: float, side: str, scale: float, levels: int):
    """Cells at distance in ``[scale*2^-k, scale*2^-(k-1)]`` from ``point``, k = 1..levels."""
    out = []
    for k in range(1, levels + 1):
        near, far = scale * math.ldexp(1.0, -k), scale * math.ldexp(1.0, -(k - 1))
        cells = []
        if side in ("right", "both"):
            cells.append((point + near, point + far))
        if side in ("left", "both"):
            cells.append((point - far, point - near))
        out.append(cells)
    return out


def _ratio(a, b):
    if b == 0:
        return mpmath.mpf(0) if a == 0 else mpmath.inf
    return a / b


def divergence_probe(phi: DifferentiableFunction, point: float, side: str | None = None, levels: int = 20,
                     tol: float = DEFAULT_TOL, threshold: float = 0.9, window: int = 5,
                     budget: int = CELL_BUDGET) -> ProbeResult:
    """Decide whether the energy of φ stays finite approaching ``point``.

    ``side`` is the side of ``point`` probed: ``"right"`` (x > point),
    ``"left"`` or ``"both"``; by default the sides inside [0, 1].  Increments
    are cell energies at geometrically shrinking distance; ``divergent`` when
    the last ``window`` consecutive increment ratios are all ``>= threshold``,
    ``finite`` when they are all below it or the last increment is below
    ``tol`` relative to the accumulated energy, ``inconclusive`` otherwise.
    """
    if not 0.0 <= point <= 1.0:
        raise ValueError("point must lie in [0, 1]")
    if side is None:
        side = "right" if point == 0.0 else "left" if point == 1.0 else "both"
    reach = []
    if side in ("right", "both"):
        reach.append(1.0 - point)
    if side in ("left", "both"):
        reach.append(point)
    others = [abs(s - point) for s in phi.singularities if s != point]
    scale = min(reach + [0.5] + [d / 2 for d in others])
    if scale <= 0.0:
        raise ValueError(f"no room to probe side {side!r} of {point}")
    results = []
    increments = []
    for cells in _probe_cells(point, side, scale, levels):
        r = combine([cell_energy(phi, lo, hi, tol, budget) for lo, hi in cells])
        results.append(r)
        increments.append(r.value if r.bounded else mpmath.inf)
    energies = []
    acc = mpmath.mpf(0)
    for v in increments:
        acc = acc + v
        energies.append(acc)
    ratios = tuple(_ratio(b, a) for a, b in zip(increments, increments[1:]))
    last = ratios[-window:]
    if any(not mpmath.isfinite(v) for v in increments):
        verdict = "divergent"
    elif len(last) == window and all(r >= threshold for r in last):
        verdict = "divergent"
    elif (len(last) == window and all(r < threshold for r in last)) or increments[-1] <= tol * (1 + energies[-1]):
        verdict = "finite"
    else:
        verdict = "inconclusive"
    return ProbeResult(point, side, verdict, tuple(increments), tuple(energies), ratios, threshold, tuple(results))
