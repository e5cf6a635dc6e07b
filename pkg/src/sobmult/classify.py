"""Numerical classification of multiplication symbols on W_0 and W^{1,2}[0,1].

On W_0 a symbol is densely defined exactly when it has finite Sobolev energy
on every compact subinterval of (0, 1); on the full space exactly when its
energy on [0, 1] is finite, and then the multiplier is bounded.  Neither
condition is finitely decidable, so both are approximated by a geometric
family of intervals plus divergence probes at the singular points, and a
verdict may be ``inconclusive``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from . import expr as ex
from . import quad
from .funcspace import DifferentiableFunction, PiecewiseLinear, ProductFunction
from .sobolev import MembershipReport, is_member

YES, NO, INCONCLUSIVE = "yes", "no", "inconclusive"
SCAN_POINTS = 1024


@dataclass(frozen=True)
class ClassifyConfig:
    levels: int = 20
    tol: float = quad.DEFAULT_TOL
    threshold: float = 0.9
    budget: int = quad.CELL_BUDGET
    family_size: int = 16


@dataclass(frozen=True)
class FamilyCheck:
    """Energy of φ on ``[2^-k, 1 - 2^-k]``."""

    k: int
    interval: tuple[float, float]
    energy: object
    member: bool


@dataclass(frozen=True)
class MultiplierVerdict:
    space: str
    densely_defined: str
    evidence: tuple
    sup_estimate: object = None
    global_energy: object = None
    bounded: bool | None = None
    singularities: tuple = ()

    @property
    def probes(self) -> tuple[quad.ProbeResult, ...]:
        return tuple(e for e in self.evidence if isinstance(e, quad.ProbeResult))


def scan_singularities(phi: DifferentiableFunction, n: int = SCAN_POINTS) -> tuple[float, ...]:
    """Declared singularities plus grid points ``i/n`` where φ or φ' fails to evaluate."""
    found = set(phi.singularities)
    for i in range(n + 1):
        x = i / n
        try:
            phi.value_wide(x)
            phi.derivative_wide(x)
        except ex.DomainError:
            found.add(x)
    return tuple(sorted(found))


def _with_singularities(phi: DifferentiableFunction, sing) -> DifferentiableFunction:
    if tuple(sing) == phi.singularities:
        return phi
    return DifferentiableFunction(phi.pieces, sing, phi.name)


def _probe(phi, point, config: ClassifyConfig, side=None):
    return quad.divergence_probe(phi, point, side, levels=config.levels, tol=config.tol,
                                 threshold=config.threshold, budget=config.budget)


def interval_family(phi: DifferentiableFunction, config: ClassifyConfig = ClassifyConfig()):
    """Energies on ``[2^-k, 1 - 2^-k]`` for ``k = 2..levels``, from dyadic cell partial sums."""
    depth = config.levels - 1
    left = quad.dyadic_profile(phi, "left", depth, config.tol, config.budget)
    right = quad.dyadic_profile(phi, "right", depth, config.tol, config.budget)
    out = []
    acc = []
    for k in range(2, config.levels + 1):
        n = k - 1
        acc.append(left.results[n - 1])
        acc.append(right.results[n - 1])
        total = quad.combine(acc)
        lo = math.ldexp(1.0, -k)
        out.append(FamilyCheck(k, (lo, 1.0 - lo), total.value if total.bounded else None, total.bounded))
    return tuple(out)


def classify_w0(phi: DifferentiableFunction, config: ClassifyConfig = ClassifyConfig()) -> MultiplierVerdict:
    """Is M_φ densely defined on W_0?

    ``no`` when a probe at an interior singularity diverges, ``yes`` when every
    interior probe is finite and the whole interval family has finite energy.
    """
    sing = scan_singularities(phi)
    phi = _with_singularities(phi, sing)
    interior = [s for s in sing if 0.0 < s < 1.0]
    probes = tuple(_probe(phi, s, config) for s in interior)
    if any(p.verdict == "divergent" for p in probes):
        return MultiplierVerdict("W0", NO, probes, singularities=sing)
    family = interval_family(phi, config)
    evidence = probes + family
    if all(p.verdict == "finite" for p in probes) and all(f.member for f in family):
        return MultiplierVerdict("W0", YES, evidence, singularities=sing)
    return MultiplierVerdict("W0", INCONCLUSIVE, evidence, singularities=sing)


def classify_full(phi: DifferentiableFunction, config: ClassifyConfig = ClassifyConfig()) -> MultiplierVerdict:
    """Is M_φ densely defined (equivalently bounded) on W^{1,2}[0, 1]?"""
    sing = scan_singularities(phi)
    phi = _with_singularities(phi, sing)
    points = sorted({0.0, 1.0} | set(sing))
    probes = tuple(_probe(phi, s, config) for s in points)
    membership = is_member(phi, 0.0, 1.0, config.tol)
    evidence = probes + (membership,)
    energy = membership.energy_value
    if any(p.verdict == "divergent" for p in probes):
        return MultiplierVerdict("full", NO, evidence, global_energy=None, bounded=False, singularities=sing)
    if all(p.verdict == "finite" for p in probes) and membership.member:
        return MultiplierVerdict("full", YES, evidence, global_energy=energy, bounded=True, singularities=sing)
    return MultiplierVerdict("full", INCONCLUSIVE, evidence, global_energy=energy, singularities=sing)


# -- boundedness probe -------------------------------------------------------


@dataclass(frozen=True)
class RatioSample:
    k: int
    endpoint: float
    ratio: object
    valid: bool
    status: str


@dataclass(frozen=True)
class BoundednessReport:
    sup_estimate: object
    samples: tuple[RatioSample, ...]
    unbounded_suspected: bool
    endpoints: tuple[float, ...] = field(default=())

    @property
    def ratios(self):
        return tuple(s.ratio for s in self.samples if s.valid)


def sup_grid(n: int = 4096, depth: int = 40) -> list[float]:
    """Uniform grid ``i/n`` plus points ``2^-j`` and ``1 - 2^-j`` toward the ends."""
    pts = {i / n for i in range(n + 1)}
    for j in range(1, depth + 1):
        t = math.ldexp(1.0, -j)
        pts.add(t)
        pts.add(1.0 - t)
    return sorted(pts)


def sup_estimate(phi: DifferentiableFunction) -> mpmath.mpf:
    best = mpmath.mpf(0)
    for x in sup_grid():
        try:
            v = abs(phi.value_wide(x))
        except ex.DomainError:
            continue
        if v > best:
            best = v
    return best


def tent(k: int, endpoint: float = 0.0) -> PiecewiseLinear:
    """Unit tent supported on ``[2^-(k+1), 2^-(k-1)]`` (mirrored when ``endpoint`` is 1)."""
    a, c, b = math.ldexp(1.0, -(k + 1)), math.ldexp(1.0, -k), math.ldexp(1.0, -(k - 1))
    if endpoint == 0.0:
        return PiecewiseLinear([a, c, b], [0.0, 1.0, 0.0])
    return PiecewiseLinear([1.0 - b, 1.0 - c, 1.0 - a], [0.0, 1.0, 0.0])


def _tent_energy(t: PiecewiseLinear) -> mpmath.mpf:
    e = t.square_integral(t.breakpoints[0], t.breakpoints[-1])
    e += sum(t.slope(i) ** 2 * (t.breakpoints[i + 1] - t.breakpoints[i]) for i in range(len(t.breakpoints) - 1))
    return mpmath.mpf(e)


def _unbounded(ratios, window: int = 5) -> bool:
    if len(ratios) < window:
        return False
    last = ratios[-window:]
    steps = [b - a for a, b in zip(last, last[1:])]
    return all(s > 0 for s in steps) and steps[-1] >= steps[0] / 2


def boundedness_probe(phi: DifferentiableFunction, m: int = 16, tol: float = quad.DEFAULT_TOL) -> BoundednessReport:
    """Sup of |φ| and growth of ``‖φ f_k‖ / ‖f_k‖`` over tents ``f_k`` near the endpoint singularities.

    With no endpoint singularity both endpoints are stressed.  A sample whose
    quadrature fails is kept but marked invalid.
    """
    sing = scan_singularities(phi)
    phi = _with_singularities(phi, sing)
    ends = tuple(e for e in (0.0, 1.0) if e in sing) or (0.0, 1.0)
    samples = []
    for k in range(2, m + 1):
        for e in ends:
            t = tent(k, e)
            g = ProductFunction(phi, t).as_function()
            r = quad.sobolev_energy(g, t.breakpoints[0], t.breakpoints[-1], tol)
            ok = r.converged
            ratio = mpmath.sqrt(r.value / _tent_energy(t)) if ok else None
            samples.append(RatioSample(k, e, ratio, ok, r.status))
    per_k = []
    for k in range(2, m + 1):
        vals = [s.ratio for s in samples if s.k == k and s.valid]
        if vals:
            per_k.append(max(vals))
    return BoundednessReport(sup_estimate(phi), tuple(samples), _unbounded(per_k), ends)


def scale_symbol(phi: DifferentiableFunction, c: float) -> DifferentiableFunction:
    return phi.scaled(c)


def verdict_table(phi: DifferentiableFunction, config: ClassifyConfig = ClassifyConfig()) -> dict:
    return {"W0": classify_w0(phi, config).densely_defined, "full": classify_full(phi, config).densely_defined}


def _member_summary(m: MembershipReport) -> dict:
    return {"interval": list(m.interval), "member": m.member, "status": m.energy.status}
