"""Compare the compiled and pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

from sobmult import _xcore_py, expr as ex

try:
    from sobmult import _xcore
except ImportError:  # extension not built
    _xcore = None

CASES = [
    ("energy x^2 on [0,1]", "(x^2)^2 + (2*x)^2", 0.0, 1.0),
    ("energy 1/x, cell n=10", "(1/x)^2 + (1/x^2)^2", 2.0 ** -11, 2.0 ** -10),
    ("energy sin(1/x), cell n=6", "sin(1/x)^2 + (cos(1/x)/x^2)^2", 2.0 ** -7, 2.0 ** -6),
    ("energy exp(1/x), cell n=30", "exp(1/x)^2 + (exp(1/x)/x^2)^2", 2.0 ** -31, 2.0 ** -30),
]


def bench(mod, prog, a, b, repeat):
    t = timeit.Timer(lambda: mod.integrate_program(prog, a, b, 1e-9, 2000))
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"{'case':32s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}  agree")
    for name, text, a, b in CASES:
        prog = ex.compile_expr(ex.parse(text))
        tp = bench(_xcore_py, prog, a, b, args.repeat)
        if _xcore is None:
            print(f"{name:32s} {tp * 1e3:12.3f} {'n/a':>14s}")
            continue
        tc = bench(_xcore, prog, a, b, args.repeat)
        same = _xcore.integrate_program(prog, a, b, 1e-9, 2000) == _xcore_py.integrate_program(prog, a, b, 1e-9, 2000)
        print(f"{name:32s} {tp * 1e3:12.3f} {tc * 1e3:14.3f} {tp / tc:8.1f}  {same}")


if __name__ == "__main__":
    main()
