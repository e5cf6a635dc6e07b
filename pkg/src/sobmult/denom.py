"""Non-vanishing denominators: ``d ∈ W_0`` with ``d ≠ 0`` on (0, 1) and ``φ d ∈ W_0``.

From the dyadic energies ``a_n`` of φ next to each endpoint, the clamp
``b_n = min(1/a_n, 1/a_{n-1}, 1)`` sets node heights ``b_n 4^-n`` at
``2^-n``; the piecewise-linear interpolant ``f`` of those nodes (mirrored for
the right half) gives ``d = x(1-x) f``.  Every estimate that makes the
construction work is recomputed by :func:`verify_denominator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from . import expr as ex
from . import quad
from .classify import YES, ClassifyConfig, classify_full
from .funcspace import DifferentiableFunction, PiecewiseLinear, ProductFunction, constant

DEFAULT_DEPTH = 40
#: zero or subnormal cell energies are raised to this before taking reciprocals
A_FLOOR = mpmath.mpf(1e-300)
MAJORANT_SLACK = 1e-6
RATIO_WINDOW = 5
SAMPLE_POINTS = 4096

A0_NOTE = "a_0 := a_1 (the clamp for b_1 uses a_1 twice)"


class ConstructionRefused(ArithmeticError):
    """A dyadic cell has divergent energy, so no denominator is built."""

    def __init__(self, side: str, n: int, cell: tuple[float, float], result: quad.QuadratureResult):
        super().__init__(f"energy diverges on {side} cell n={n} {list(cell)} ({result.status})")
        self.side, self.n, self.cell, self.result = side, n, cell, result


@dataclass(frozen=True)
class BSequence:
    values: tuple

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _recip_down(a) -> mpmath.mpf:
    # rounding toward zero keeps a * (1/a) <= 1 exactly
    return mpmath.fdiv(1, a, rounding="d")


def b_sequence(profile) -> BSequence:
    """Clamp sequence of a profile (or any sequence of positive energies)."""
    energies = profile.energies if isinstance(profile, quad.DyadicProfile) else profile
    a = [max(mpmath.mpf(v), A_FLOOR) for v in energies]
    if not a:
        raise ValueError("empty profile")
    if any(not mpmath.isfinite(v) for v in a):
        raise ValueError("profile contains a divergent energy")
    one = mpmath.mpf(1)
    recips = [_recip_down(v) for v in a]
    out = []
    for n in range(len(a)):
        prev = recips[n - 1] if n > 0 else recips[0]
        out.append(min(recips[n], prev, one))
    return BSequence(tuple(out))


def left_nodes(b: BSequence) -> list[tuple[float, mpmath.mpf]]:
    """Nodes ``(2^-n, b_n 4^-n)`` for n = N..1, preceded by ``(2^-(N+1), b_N 4^-(N+1))``."""
    n_max = len(b)
    nodes = [(math.ldexp(1.0, -(n_max + 1)), mpmath.ldexp(b[n_max - 1], -2 * (n_max + 1)))]
    for n in range(n_max, 0, -1):
        nodes.append((math.ldexp(1.0, -n), mpmath.ldexp(b[n - 1], -2 * n)))
    return nodes


def left_interpolant(b: BSequence, n: int | None = None) -> PiecewiseLinear:
    if n is not None and n != len(b):
        raise ValueError("N must equal the length of b")
    nodes = left_nodes(b)
    return PiecewiseLinear([x for x, _ in nodes], [y for _, y in nodes])


def piece_formula(b: BSequence, n: int, x: float):
    """Closed form of the interpolant on ``[2^-(n+1), 2^-n]`` (n < N)."""
    slope = (4 * b[n - 1] - b[n]) / mpmath.mpf(2) ** (n + 1)
    return b[n] / mpmath.mpf(4) ** (n + 1) + slope * (x - mpmath.ldexp(1, -(n + 1)))


@dataclass
class VerificationReport:
    valid: bool
    failed: tuple[str, ...]
    energy_d: object
    energy_phi_d: object
    cell_energies: dict
    partial_sums: dict
    term_ratios: dict
    majorant_terms: dict
    tail_ratios: dict
    majorant_checks: dict
    min_abs_d: object
    endpoint_values: tuple
    endpoint_flags: tuple[bool, bool]
    tol: float
    notes: tuple[str, ...] = ()


@dataclass
class DenominatorResult:
    phi: DifferentiableFunction
    d: ProductFunction
    f: PiecewiseLinear
    depth: int
    trivial: bool
    left_profile: quad.DyadicProfile | None = None
    right_profile: quad.DyadicProfile | None = None
    left_b: BSequence | None = None
    right_b: BSequence | None = None
    glue: dict = field(default_factory=dict)
    certificate: VerificationReport | None = None

    def side_nodes(self, side: str) -> list:
        """Node values ``y_1..y_{N+1}`` at distance ``2^-n`` from the endpoint of ``side``."""
        ys = self.f.values
        k = self.depth + 1
        if side == "left":
            return list(reversed(ys[:k]))
        return list(ys[-k:])

    def samples(self, n_points: int = SAMPLE_POINTS) -> list[tuple[float, object, object]]:
        rows = []
        for x in sample_grid(self.depth, n_points):
            dv = self.d.value(x)
            pd = ProductFunction(self.phi, self.f, weight=True).value(x)
            rows.append((x, dv, pd))
        return rows


def sample_grid(depth: int, n_points: int = SAMPLE_POINTS) -> list[float]:
    """Log-dense grid on ``[2^-(N+1), 1 - 2^-(N+1)]``, symmetric about 1/2."""
    half = n_points // 2
    lo = math.ldexp(1.0, -(depth + 1))
    span = depth  # log2(0.5 / lo)
    left = [lo * 2.0 ** (span * i / half) for i in range(half)]
    return left + [1.0 - t for t in reversed(left)]


def _scale_down(values, r) -> list:
    return [mpmath.fmul(v, r, rounding="d") for v in values]


def _profiles(phi, depth, tol, budget):
    profiles = {}
    for side in ("left", "right"):
        prof = quad.dyadic_profile(phi, side, depth, tol, budget)
        for n, r in enumerate(prof.results, start=1):
            if not r.bounded:
                raise ConstructionRefused(side, n, prof.cell(n), r)
        profiles[side] = prof
    return profiles


def build_denominator(phi: DifferentiableFunction, depth: int = DEFAULT_DEPTH, tol: float = quad.DEFAULT_TOL,
                      budget: int = quad.CELL_BUDGET, verify: bool = True,
                      config: ClassifyConfig | None = None) -> DenominatorResult:
    """Construct ``d = x(1-x) f``; ``f ≡ 1`` when φ already has finite global energy."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    config = config or ClassifyConfig(tol=tol, budget=budget)
    if classify_full(phi, config).densely_defined == YES:
        f = PiecewiseLinear([0.0, 1.0], [mpmath.mpf(1), mpmath.mpf(1)])
        res = DenominatorResult(phi, ProductFunction(constant(1.0), f, weight=True, name="x*(1-x)"), f, depth, True)
    else:
        prof = _profiles(phi, depth, tol, budget)
        bl, br = b_sequence(prof["left"]), b_sequence(prof["right"])
        left = left_nodes(bl)
        right = [(1.0 - x, y) for x, y in reversed(left_nodes(br))]
        yl, yr = left[-1][1], right[0][1]
        # glue at 1/2 by scaling the larger half down, so every b-inequality survives
        if yl > yr:
            r = mpmath.fdiv(yr, yl, rounding="d")
            lv = _scale_down([y for _, y in left[:-1]], r) + [yr]
            left = [(x, v) for (x, _), v in zip(left, lv)]
            glue = {"scaled": "left", "factor": r}
        elif yr > yl:
            r = mpmath.fdiv(yl, yr, rounding="d")
            rv = [yl] + _scale_down([y for _, y in right[1:]], r)
            right = [(x, v) for (x, _), v in zip(right, rv)]
            glue = {"scaled": "right", "factor": r}
        else:
            glue = {"scaled": None, "factor": mpmath.mpf(1)}
        nodes = left + right[1:]
        f = PiecewiseLinear([x for x, _ in nodes], [y for _, y in nodes])
        d = ProductFunction(constant(1.0), f, weight=True, name="d")
        res = DenominatorResult(phi, d, f, depth, False, prof["left"], prof["right"], bl, br, glue)
    if verify:
        res.certificate = verify_denominator(phi, res, tol, budget)
    return res


# -- verification ------------------------------------------------------------


def _ratios(seq):
    return [b / a if a > 0 else (mpmath.mpf(0) if b == 0 else mpmath.inf) for a, b in zip(seq, seq[1:])]


def _tail_ok(ratios) -> bool:
    last = ratios[-RATIO_WINDOW:]
    return len(last) == RATIO_WINDOW and all(r < 1 for r in last)


def _segment_on(f: PiecewiseLinear, lo: float, hi: float) -> ex.Expr:
    i = f.segment(0.5 * (lo + hi))
    return f.segment_expr(i)


def _bound_sq(phi_exprs, f_sup_sq, lo, hi, tol, budget):
    """Upper bound for ``∫ |g·f|²`` given ``sup f² = f_sup_sq``: quadrature, else ``sup f² ∫ g²``."""
    total = mpmath.mpf(0)
    for g, lin in phi_exprs:
        r = quad.robust_integral([ex.Mul(g, lin)], lo, hi, tol, budget)
        if r.converged:
            total += r.value
            continue
        wide = quad.robust_integral([g], lo, hi, tol, budget)
        total += f_sup_sq * wide.value if wide.bounded else mpmath.inf
    return total


def _majorant(phi, res: DenominatorResult, side: str, tol, budget):
    prof = res.left_profile if side == "left" else res.right_profile
    ys = res.side_nodes(side)
    terms, checks = [], []
    slack = 1 + MAJORANT_SLACK
    for n in range(1, res.depth + 1):
        a = prof.energies[n - 1]
        y0, y1 = ys[n - 1], ys[n]
        top = max(y0 * y0, y1 * y1)
        t_n = a * top
        terms.append(t_n)
        lo, hi = quad.dyadic_cell(n, side)
        lin = _segment_on(res.f, lo, hi)
        slope = res.f.slope(res.f.segment(0.5 * (lo + hi)))
        pieces = phi.restrict(lo, hi)
        ok = True
        detail = {}
        for name, pairs, bound, sup in (
            ("phi_f", [(p.expr, lin) for p in pieces], t_n, top),
            ("dphi_f", [(p.dexpr, lin) for p in pieces], t_n, top),
            ("phi_df", [(p.expr, ex.Const(1.0)) for p in pieces], a * slope * slope, None),
        ):
            sub = []
            for p, (g, l) in zip(pieces, pairs):
                if sup is None:
                    r = quad.robust_integral([g], max(lo, p.lo), min(hi, p.hi), tol, budget)
                    sub.append(r.value * slope * slope if r.bounded else mpmath.inf)
                else:
                    sub.append(_bound_sq([(g, l)], sup, max(lo, p.lo), min(hi, p.hi), tol, budget))
            val = mpmath.fsum(sub)
            detail[name] = val
            ok = ok and val <= bound * slack
        checks.append({"n": n, "ok": ok, "bound": t_n, **detail})
    return terms, checks


def verify_denominator(phi: DifferentiableFunction, res: DenominatorResult, tol: float = quad.DEFAULT_TOL,
                       budget: int = quad.CELL_BUDGET) -> VerificationReport:
    """Recheck every property of the construction; failed clauses are named."""
    failed = []
    notes = [] if res.trivial else [A0_NOTE, f"glue: {res.glue.get('scaled') or 'none'} scaled"]

    d_fun = res.d.as_function()
    energy_d = quad.combine([quad.cell_energy(d_fun, p.lo, p.hi, tol, budget) for p in d_fun.pieces])
    if not energy_d.bounded:
        failed.append("energy_d")

    g = ProductFunction(phi, res.f, weight=True).as_function()
    cells, sums, term_ratios = {}, {}, {}
    total = []
    for side in ("left", "right"):
        rs = [quad.cell_energy(g, *quad.dyadic_cell(n, side), tol=tol, budget=budget)
              for n in range(1, res.depth + 1)]
        vals = [r.value if r.bounded else mpmath.inf for r in rs]
        cells[side] = vals
        acc, ps = mpmath.mpf(0), []
        for v in vals:
            acc += v
            ps.append(acc)
        sums[side] = ps
        term_ratios[side] = _ratios(vals)
        total.extend(rs)
        if not all(mpmath.isfinite(v) for v in vals):
            failed.append(f"energy_phi_d_{side}")
        elif not _tail_ok(term_ratios[side]):
            failed.append(f"cell_ratios_{side}")
    if res.trivial:
        # f has full support; the part beyond the last cells is included in the global energy
        phi_d = quad.combine([quad.cell_energy(g, p.lo, p.hi, tol, budget) for p in g.pieces])
    else:
        phi_d = quad.combine(total)
    energy_phi_d = phi_d.value if phi_d.bounded else None
    if energy_phi_d is None:
        failed.append("energy_phi_d")

    terms, tails, mchecks = {}, {}, {}
    if not res.trivial:
        for side in ("left", "right"):
            t, c = _majorant(phi, res, side, tol, budget)
            terms[side], mchecks[side] = t, c
            tails[side] = _ratios(t)
            if not _tail_ok(tails[side]):
                failed.append(f"tail_ratios_{side}")
            if not all(ch["ok"] for ch in c):
                failed.append(f"majorant_{side}")

    xs = res.f.breakpoints
    grid = [0.5 * (a + b) for a, b in zip(xs, xs[1:])]
    min_abs_d = min(abs(res.d.value(x)) for x in grid)
    if not min_abs_d > 0:
        failed.append("min_abs_d")

    ends = res.d.endpoint_values()
    flags = (ends[0] == 0, ends[1] == 0)
    if not all(flags):
        failed.append("endpoints")

    return VerificationReport(
        valid=not failed, failed=tuple(failed), energy_d=energy_d.value if energy_d.bounded else None,
        energy_phi_d=energy_phi_d, cell_energies=cells, partial_sums=sums, term_ratios=term_ratios,
        majorant_terms=terms, tail_ratios=tails, majorant_checks=mchecks, min_abs_d=min_abs_d,
        endpoint_values=ends, endpoint_flags=flags, tol=tol, notes=tuple(notes))
