"""Function model shared by symbols, kernels and constructed denominators.

A :class:`DifferentiableFunction` is a list of expression pieces, each valid on
a closed-open interval, which keeps every quantity symbolic so derivatives are
exact and integrands compile to kernel programs.  :class:`PiecewiseLinear`
carries node data exactly; node values may be ``mpmath.mpf`` when they fall
outside binary64 range.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import mpmath

from . import _backend
from . import expr as ex
from .expr import Expr


def wide(m: float, e: int) -> mpmath.mpf:
    """``m * 2**e`` as an mpf (exponent range is unbounded)."""
    if not math.isfinite(m):
        return mpmath.mpf(m)
    return mpmath.ldexp(mpmath.mpf(m), int(e))


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    expr: Expr
    dexpr: Expr

    @cached_property
    def programs(self):
        return ex.compile_expr(self.expr), ex.compile_expr(self.dexpr)


class DifferentiableFunction:
    """A symbol with exact a.e. derivative.

    ``value``/``derivative`` evaluate in binary64 and raise
    :class:`~sobmult.expr.DomainError` at singular points; the ``*_wide``
    variants return mpf and never overflow.  Outside every piece the function
    is 0.  At a piece boundary the right-hand piece is used.
    """

    def __init__(self, pieces: Sequence[Piece], singularities: Iterable[float] = (), name: str = ""):
        self.pieces = tuple(sorted(pieces, key=lambda p: p.lo))
        sing = sorted({float(s) for s in singularities})
        if any(s < 0.0 or s > 1.0 for s in sing):
            raise ValueError("singularities must lie in [0, 1]")
        self.singularities = tuple(sing)
        self.name = name or (str(self.pieces[0].expr) if len(self.pieces) == 1 else "piecewise")
        self._los = [p.lo for p in self.pieces]

    @classmethod
    def from_expr(cls, e: Expr | str, singularities: Iterable[float] = (), name: str | None = None,
                  lo: float = 0.0, hi: float = 1.0) -> "DifferentiableFunction":
        if isinstance(e, str):
            name = name or e
            e = ex.parse(e)
        return cls([Piece(lo, hi, e, ex.differentiate(e))], singularities, name or str(e))

    @property
    def expr(self) -> Expr:
        if len(self.pieces) != 1:
            raise ValueError("piecewise function has no single expression")
        return self.pieces[0].expr

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = {p.lo for p in self.pieces} | {p.hi for p in self.pieces}
        return tuple(sorted(pts))

    def piece_at(self, x: float) -> Piece | None:
        i = bisect.bisect_right(self._los, x) - 1
        if i < 0:
            return None
        p = self.pieces[i]
        if x < p.hi or (x == p.hi and i == len(self.pieces) - 1):
            return p
        return None

    def value(self, x: float) -> float:
        p = self.piece_at(x)
        return 0.0 if p is None else ex.evaluate(p.expr, x)

    __call__ = value

    def derivative(self, x: float) -> float:
        p = self.piece_at(x)
        return 0.0 if p is None else ex.evaluate(p.dexpr, x)

    def _wide(self, x: float, which: int):
        p = self.piece_at(x)
        if p is None:
            return mpmath.mpf(0)
        m, e, st = _backend.eval_program(p.programs[which], [x])[0]
        if st:
            raise ex.DomainError(f"{self.name} not evaluable at x={x!r}")
        return wide(m, e)

    def value_wide(self, x: float) -> mpmath.mpf:
        return self._wide(x, 0)

    def derivative_wide(self, x: float) -> mpmath.mpf:
        return self._wide(x, 1)

    def scaled(self, c: float) -> "DifferentiableFunction":
        k = ex.Const(float(c))
        pieces = [Piece(p.lo, p.hi, ex.Mul(k, p.expr), ex.Mul(k, p.dexpr)) for p in self.pieces]
        return DifferentiableFunction(pieces, self.singularities, f"{c}*({self.name})")

    def restrict(self, a: float, b: float) -> list[Piece]:
        """Pieces clipped to ``[a, b]``, in order."""
        out = []
        for p in self.pieces:
            lo, hi = max(a, p.lo), min(b, p.hi)
            if lo < hi:
                out.append(Piece(lo, hi, p.expr, p.dexpr))
        return out

    def __repr__(self):
        return f"DifferentiableFunction({self.name!r}, singularities={list(self.singularities)})"


def constant(c: float = 1.0) -> DifferentiableFunction:
    return DifferentiableFunction.from_expr(ex.Const(float(c)), name=repr(float(c)))


class PiecewiseLinear:
    """Linear interpolant of ``(breakpoint, value)`` nodes; 0 outside the node span."""

    def __init__(self, breakpoints: Sequence[float], values: Sequence):
        xs = tuple(float(x) for x in breakpoints)
        if len(xs) < 2:
            raise ValueError("need at least two breakpoints")
        if len(values) != len(xs):
            raise ValueError("one value per breakpoint required")
        if any(not (a < b) for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        self.breakpoints = xs
        self.values = tuple(values)

    @property
    def nodes(self):
        return list(zip(self.breakpoints, self.values))

    def segment(self, x: float) -> int:
        """Index ``i`` of the segment ``[x_i, x_{i+1})`` containing ``x``, or -1."""
        xs = self.breakpoints
        if x < xs[0] or x >= xs[-1]:
            return -1
        return bisect.bisect_right(xs, x) - 1

    def __call__(self, x: float):
        xs, ys = self.breakpoints, self.values
        if x < xs[0] or x > xs[-1]:
            return 0.0
        i = bisect.bisect_left(xs, x)
        if xs[i] == x:
            return ys[i]
        x0, x1 = xs[i - 1], xs[i]
        w = x1 - x0
        return ys[i - 1] * ((x1 - x) / w) + ys[i] * ((x - x0) / w)

    def slope(self, i: int):
        return (self.values[i + 1] - self.values[i]) / (self.breakpoints[i + 1] - self.breakpoints[i])

    def derivative(self, x: float):
        """Slope of the active segment; right-hand slope at breakpoints, 0 outside."""
        i = self.segment(x)
        return 0.0 if i < 0 else self.slope(i)

    def square_integral(self, a: float, b: float):
        """Exact ``∫_a^b p(x)^2 dx`` segment by segment."""
        if a > b:
            raise ValueError("need a <= b")
        xs = self.breakpoints
        total = 0.0
        for i in range(len(xs) - 1):
            lo, hi = max(a, xs[i]), min(b, xs[i + 1])
            if lo >= hi:
                continue
            u, v = self(lo), self(hi)
            total = total + (hi - lo) * (u * u + u * v + v * v) / 3
        return total

    def segment_expr(self, i: int) -> Expr:
        """The linear piece on segment ``i`` written as a positive combination of its node values."""
        x0, x1 = self.breakpoints[i], self.breakpoints[i + 1]
        y0, y1 = self.values[i], self.values[i + 1]
        w = x1 - x0
        left = ex.Mul(ex.const(y0 / w), ex.Sub(ex.Const(x1), ex.X))
        right = ex.Mul(ex.const(y1 / w), ex.Sub(ex.X, ex.Const(x0)))
        return ex.Add(left, right)

    def scaled(self, c) -> "PiecewiseLinear":
        return PiecewiseLinear(self.breakpoints, [v * c for v in self.values])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["x", "y"])
        for x, y in self.nodes:
            w.writerow([format_real(x), format_real(y)])
        return buf.getvalue()

    def __repr__(self):
        return f"PiecewiseLinear({len(self.breakpoints)} nodes on [{self.breakpoints[0]}, {self.breakpoints[-1]}])"


def pl_from_nodes(nodes: Iterable[tuple[float, object]]) -> PiecewiseLinear:
    nodes = list(nodes)
    return PiecewiseLinear([x for x, _ in nodes], [y for _, y in nodes])


def pl_derivative(p: PiecewiseLinear, x: float):
    return p.derivative(x)


def pl_square_integral(p: PiecewiseLinear, a: float, b: float):
    return p.square_integral(a, b)


_BUBBLE = ex.Mul(ex.X, ex.Sub(ex.Const(1.0), ex.X))


@dataclass
class ProductFunction:
    """``smooth * pl``, optionally times the weight ``x(1-x)``."""

    smooth: DifferentiableFunction
    pl: PiecewiseLinear
    weight: bool = False
    name: str = field(default="")

    def _w(self, x):
        return x * (1.0 - x) if self.weight else 1.0

    def _dw(self, x):
        return 1.0 - 2.0 * x if self.weight else 0.0

    def value(self, x: float):
        p = self.pl(x)
        w = self._w(x)
        if p == 0 or w == 0:
            return mpmath.mpf(0)
        return self.smooth.value_wide(x) * w * p

    __call__ = value

    def derivative(self, x: float):
        p, dp = self.pl(x), self.pl.derivative(x)
        w, dw = self._w(x), self._dw(x)
        if p == 0 and dp == 0:
            return mpmath.mpf(0)
        phi = self.smooth.value_wide(x)
        dphi = self.smooth.derivative_wide(x)
        return dphi * w * p + phi * dw * p + phi * w * dp

    def endpoint_values(self):
        return (self.value(0.0), self.value(1.0))

    def as_function(self) -> DifferentiableFunction:
        """Exact piecewise-expression form, one piece per PL segment and smooth piece."""
        pieces = []
        xs = self.pl.breakpoints
        for i in range(len(xs) - 1):
            lin = self.pl.segment_expr(i)
            if self.weight:
                lin = ex._mul(_BUBBLE, lin)
            for sp in self.smooth.restrict(xs[i], xs[i + 1]):
                e = ex._mul(sp.expr, lin)
                pieces.append(Piece(sp.lo, sp.hi, e, ex.differentiate(e)))
        sing = [s for s in self.smooth.singularities if xs[0] <= s <= xs[-1]]
        return DifferentiableFunction(pieces, sing, self.name or f"({self.smooth.name})*pl")


def multiply(phi: DifferentiableFunction, p: PiecewiseLinear, weight: bool = False) -> ProductFunction:
    return ProductFunction(phi, p, weight)


def format_real(v) -> str:
    """Shortest round-trip text for a float; 17 significant digits for wide values."""
    if isinstance(v, mpmath.mpf):
        if mpmath.isfinite(v) and (v == 0 or abs(v) < mpmath.mpf(2) ** 1023 and abs(v) > mpmath.mpf(2) ** -1021):
            return repr(float(v))
        return mpmath.nstr(v, 17, min_fixed=1, max_fixed=0)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))
