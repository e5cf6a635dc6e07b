"""Command-line driver: ``sobmult classify | denom | kernel``.

Exit codes: 0 success, 1 inconclusive verdict or invalid certificate,
2 parse or configuration error, 3 construction refused.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass

import mpmath

from . import __version__
from . import classify as cl
from . import denom as dn
from . import expr as ex
from . import quad, sobolev
from .catalog import CATALOG, lookup
from .funcspace import DifferentiableFunction, constant, format_real

SCHEMA = "sobmult.report/1"
EXIT_OK, EXIT_INCONCLUSIVE, EXIT_PARSE, EXIT_REFUSED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    function: str
    singularities: tuple[float, ...]
    depth: int = dn.DEFAULT_DEPTH
    tol: float = quad.DEFAULT_TOL
    levels: int = 20
    fmt: str = "json"
    output: str | None = None
    plot_data: str | None = None
    timings: bool = False
    catalog: str | None = None

    def validate(self):
        if self.depth < 4:
            raise ConfigError("--depth must be >= 4")
        if not 0 < self.tol <= 1e-2:
            raise ConfigError("--tol must lie in (0, 1e-2]")
        if self.levels < 6:
            raise ConfigError("--levels must be >= 6")
        if any(not 0.0 <= s <= 1.0 for s in self.singularities):
            raise ConfigError("singularities must lie in [0, 1]")

    def classify_config(self) -> cl.ClassifyConfig:
        return cl.ClassifyConfig(levels=self.levels, tol=self.tol)

    def echo(self) -> dict:
        return {"function": self.function, "catalog": self.catalog, "singularities": list(self.singularities),
                "depth": self.depth, "tol": self.tol, "levels": self.levels}


# -- number formatting -------------------------------------------------------


def num(v):
    """JSON value for a real: a number when binary64 can hold it, else a string."""
    if v is None or isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, mpmath.mpf):
        if not mpmath.isfinite(v):
            return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        if v == 0 or mpmath.mpf(2) ** -1021 < abs(v) < mpmath.mpf(2) ** 1023:
            return float(v)
        return format_real(v)
    f = float(v)
    if not math.isfinite(f):
        return "inf" if f > 0 else ("-inf" if f < 0 else "nan")
    return f


def _nums(seq):
    return [num(v) for v in seq]


# -- report sections ---------------------------------------------------------


def _probe_json(p: quad.ProbeResult, tol) -> dict:
    return {"kind": "probe", "point": p.point, "side": p.side, "verdict": p.verdict,
            "threshold": p.threshold, "increments": _nums(p.increments), "ratios": _nums(p.ratios), "tol": tol}


def _evidence_json(e, tol) -> dict:
    if isinstance(e, quad.ProbeResult):
        return _probe_json(e, tol)
    if isinstance(e, cl.FamilyCheck):
        return {"kind": "interval", "k": e.k, "interval": list(e.interval), "member": e.member,
                "energy": num(e.energy), "tol": tol}
    return {"kind": "membership", "interval": list(e.interval), "member": e.member,
            "energy": num(e.energy_value), "status": e.energy.status, "tol": tol}


def verdict_json(v: cl.MultiplierVerdict, tol) -> dict:
    out = {"space": v.space, "denselyDefined": v.densely_defined, "singularities": list(v.singularities),
           "tol": tol}
    if v.space == "full":
        out["bounded"] = v.bounded
        out["globalEnergy"] = num(v.global_energy)
    out["evidence"] = [_evidence_json(e, tol) for e in v.evidence]
    return out


def boundedness_json(b: cl.BoundednessReport, tol) -> dict:
    return {"supEstimate": num(b.sup_estimate), "unboundedSuspected": b.unbounded_suspected,
            "endpoints": list(b.endpoints), "tol": tol,
            "ratioSamples": [{"k": s.k, "endpoint": s.endpoint, "ratio": num(s.ratio), "valid": s.valid,
                              "status": s.status} for s in b.samples]}


def certificate_json(res: dn.DenominatorResult) -> dict:
    c = res.certificate
    out = {"valid": c.valid, "failed": list(c.failed), "trivial": res.trivial, "depth": res.depth, "tol": c.tol,
           "energyD": num(c.energy_d), "energyPhiD": num(c.energy_phi_d), "minAbsD": num(c.min_abs_d),
           "endpointValues": _nums(c.endpoint_values), "endpointFlags": list(c.endpoint_flags),
           "notes": list(c.notes)}
    if not res.trivial:
        out["glue"] = {"scaled": res.glue["scaled"], "factor": num(res.glue["factor"])}
    sides = {}
    for side in ("left", "right"):
        s = {"cellEnergies": _nums(c.cell_energies[side]), "partialSums": _nums(c.partial_sums[side]),
             "cellRatios": _nums(c.term_ratios[side])}
        if not res.trivial:
            prof = res.left_profile if side == "left" else res.right_profile
            b = res.left_b if side == "left" else res.right_b
            s["a"] = _nums(prof.energies)
            s["aStatus"] = [r.status for r in prof.results]
            s["b"] = _nums(b.values)
            s["majorantTerms"] = _nums(c.majorant_terms[side])
            s["tailRatios"] = _nums(c.tail_ratios[side])
            s["majorantOk"] = [ch["ok"] for ch in c.majorant_checks[side]]
        sides[side] = s
    out["sides"] = sides
    out["nodes"] = [[num(x), num(y)] for x, y in res.f.nodes]
    return out


# -- output ------------------------------------------------------------------


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, "" if obj is None else json.dumps(obj) if isinstance(obj, bool) else obj))


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    rows = []
    _flatten("", report, rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["field", "value"])
    w.writerows(rows)
    return buf.getvalue()


def write_text(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def resolve(config: RunConfig) -> DifferentiableFunction:
    if config.catalog:
        entry = lookup(config.catalog)
        sing = config.singularities or entry.singularities
        return DifferentiableFunction.from_expr(entry.text, sing, entry.name)
    return DifferentiableFunction.from_expr(config.function, config.singularities)


def _header(config: RunConfig, command: str) -> dict:
    return {"schema": SCHEMA, "tool": {"name": "sobmult", "version": __version__}, "command": command,
            "input": config.echo()}


class _Clock:
    def __init__(self, on: bool):
        self.on, self.marks = on, {}

    def run(self, name, fn, *a, **kw):
        t = time.perf_counter()
        out = fn(*a, **kw)
        self.marks[name] = round(time.perf_counter() - t, 6)
        return out


# -- commands ----------------------------------------------------------------


def cmd_classify(config: RunConfig) -> tuple[dict, int]:
    phi = resolve(config)
    cc = config.classify_config()
    clock = _Clock(config.timings)
    w0 = clock.run("classifyW0", cl.classify_w0, phi, cc)
    full = clock.run("classifyFull", cl.classify_full, phi, cc)
    rep = _header(config, "classify")
    rep["verdicts"] = {"W0": verdict_json(w0, config.tol), "full": verdict_json(full, config.tol)}
    if w0.densely_defined == cl.YES:
        b = clock.run("boundednessProbe", cl.boundedness_probe, phi, tol=config.tol)
        rep["boundedness"] = boundedness_json(b, config.tol)
    else:
        rep["boundedness"] = None
    if config.timings:
        rep["timings"] = clock.marks
    code = EXIT_INCONCLUSIVE if cl.INCONCLUSIVE in (w0.densely_defined, full.densely_defined) else EXIT_OK
    return rep, code


def samples_csv(res: dn.DenominatorResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["x", "d(x)", "(phi*d)(x)"])
    for x, d, pd in res.samples():
        w.writerow([format_real(x), format_real(d), format_real(pd)])
    return buf.getvalue()


def cmd_denom(config: RunConfig) -> tuple[dict, int]:
    phi = resolve(config)
    clock = _Clock(config.timings)
    rep = _header(config, "denom")
    try:
        res = clock.run("buildDenominator", dn.build_denominator, phi, config.depth, config.tol,
                        config=config.classify_config())
    except dn.ConstructionRefused as exc:
        rep["refused"] = {"side": exc.side, "n": exc.n, "cell": list(exc.cell), "status": exc.result.status,
                          "message": str(exc)}
        return rep, EXIT_REFUSED
    rep["certificate"] = certificate_json(res)
    if config.plot_data:
        write_text(samples_csv(res), config.plot_data)
    if config.timings:
        rep["timings"] = clock.marks
    return rep, EXIT_OK if res.certificate.valid else EXIT_INCONCLUSIVE


KERNEL_FAMILY = (("1", constant(1.0)), ("x", DifferentiableFunction.from_expr("x")),
                 ("x^2", DifferentiableFunction.from_expr("x^2")),
                 ("cosh(x)", DifferentiableFunction.from_expr("(exp(x)+exp(-x))/2", name="cosh(x)")))


def kernel_rows(points, tol, grid: int = 11) -> list[dict]:
    rows = []
    ys = [i / (grid - 1) for i in range(grid)]
    for x in points:
        kx = sobolev.kernel_function(x)
        res = {}
        for name, f in KERNEL_FAMILY:
            res[name] = abs(sobolev.inner_product(f, kx, tol) - f.value(x))
        for y in ys:
            k = sobolev.kernel_value(x, y)
            rows.append({"x": x, "y": y, "k": k, "symmetry": abs(k - sobolev.kernel_value(y, x)), "residuals": res})
    return rows


def cmd_kernel(config: RunConfig, points) -> tuple[str, int]:
    rows = kernel_rows(points, config.tol)
    names = [n for n, _ in KERNEL_FAMILY]
    if config.fmt == "json":
        rep = _header(config, "kernel")
        rep["points"] = list(points)
        rep["samples"] = [{"x": r["x"], "y": r["y"], "k": r["k"], "symmetryResidual": r["symmetry"]} for r in rows]
        seen = {}
        for r in rows:
            seen.setdefault(r["x"], {n: num(r["residuals"][n]) for n in names})
        rep["residuals"] = [{"x": x, "tol": config.tol, "residuals": v} for x, v in seen.items()]
        return render(rep, "json"), EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["x", "y", "k_x(y)", "symmetry_residual"] + [f"residual[{n}]" for n in names])
    for r in rows:
        w.writerow([format_real(r["x"]), format_real(r["y"]), format_real(r["k"]), format_real(r["symmetry"])]
                   + [format_real(r["residuals"][n]) for n in names])
    return buf.getvalue(), EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    if not text.strip():
        return ()
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"not a comma-separated list of reals: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sobmult", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sobmult {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--function", help="symbol in x, e.g. 'sin(1/x)'")
    src.add_argument("--catalog", help=f"built-in symbol: {', '.join(CATALOG)}")
    common.add_argument("--singularities", default="", help="comma-separated points in [0, 1]")
    common.add_argument("--depth", type=int, default=dn.DEFAULT_DEPTH)
    common.add_argument("--tol", type=float, default=quad.DEFAULT_TOL)
    common.add_argument("--levels", type=int, default=20)
    common.add_argument("--output", help="report path (default: stdout)")
    common.add_argument("--plot-data", help="CSV samples of d and phi*d (denom only)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte identity)")
    sub.add_parser("classify", parents=[common], help="classify a symbol on W_0 and W^{1,2}")
    sub.add_parser("denom", parents=[common], help="build and certify a non-vanishing denominator")
    k = sub.add_parser("kernel", parents=[common], help="reproducing kernel samples and residuals")
    k.add_argument("--points", default="0,0.3,1", help="comma-separated x values in [0, 1]")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(function=args.function or "", singularities=_floats(args.singularities),
                           depth=args.depth, tol=args.tol, levels=args.levels, fmt=args.format,
                           output=args.output, plot_data=args.plot_data, timings=args.timings,
                           catalog=args.catalog)
        config.validate()
        if args.command == "kernel":
            points = _floats(args.points)
            if any(not 0.0 <= x <= 1.0 for x in points):
                raise ConfigError("--points must lie in [0, 1]")
            text, code = cmd_kernel(config, points)
            write_text(text, config.output)
            return code
        if not (config.function or config.catalog):
            raise ConfigError("one of --function or --catalog is required")
        run = cmd_classify if args.command == "classify" else cmd_denom
        rep, code = run(config)
    except (ex.ExprSyntaxError, ex.UnknownIdentifierError) as exc:
        print(f"sobmult: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, KeyError) as exc:
        print(f"sobmult: {exc}", file=sys.stderr)
        return EXIT_PARSE
    write_text(render(rep, config.fmt), config.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
