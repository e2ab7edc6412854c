"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot kernels on a realistic workload (the catalog integrand's
partials over 11 levels x 2002 nodes, and the difference gradient on the
same arrays), then a full solve + conserved-quantity pipeline under each
backend via subprocesses with FUZZYVAR_BACKEND set.

Run:  python benchmarks/bench_backends.py [--quick]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fuzzyvar import _accel  # noqa: E402
from fuzzyvar import expressions as ex  # noqa: E402

PIPELINE = """
import time
import numpy as np
import fuzzyvar as fv
from fuzzyvar import _accel
from fuzzyvar import expressions as ex
from fuzzyvar.engine import LagrangianSpec, VariationalProblem, solve_extremal, uniform_nodes
from fuzzyvar.noether import SymmetryGenerator, conserved_quantity

grid = fv.LevelGrid.uniform(11)
lag = LagrangianSpec.from_expressions(ex.parse("x*vl^2"), ex.parse("x*vu^2"))
xs = uniform_nodes(1.0, float(np.e), {intervals})
p = VariationalProblem(1.0, float(np.e), grid, xs, lag,
                       fv.triangular(0, 1, 2, grid), fv.triangular(1, 2, 3, grid))
gen = SymmetryGenerator(zeta_lower=ex.parse("ql"), zeta_upper=ex.parse("qu"),
                        tau=ex.parse("2*x*ln(x)"))
solve_extremal(p)  # warm: jit compilation, caches
start = time.perf_counter()
for _ in range({repeats}):
    sol, diag = solve_extremal(p)
    conserved_quantity(p, gen, sol)
elapsed = (time.perf_counter() - start) / {repeats}
print(f"backend={{_accel.BACKEND}} pipeline {{elapsed * 1000:.1f}} ms/run")
"""


def time_kernel(fn, *args, repeats):
    fn(*args)  # warm
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def kernel_benchmarks(repeats):
    expr = ex.parse("x*vl^2 + 2*x*ln(x)*vu - ql*qu/(x+1) + sqrt(x^2+1)")
    prog = ex.compile_program(expr)
    n = 11 * 2002
    rng = np.random.default_rng(0)
    B = ex.bindings(n, **{name: rng.uniform(0.5, 2.0, n) for name in ex.VARIABLES})
    xs = np.linspace(1.0, 2.7, 2002)
    rows = rng.normal(size=(11, 2002))

    results = []
    results.append(
        (
            "program eval (22k pts)",
            time_kernel(_accel._eval_program_numpy, prog.codes, prog.payload, prog.depth, B, repeats=repeats),
            time_kernel(_accel._eval_program_numba, prog.codes, prog.payload, prog.depth, B, repeats=repeats)
            if _accel.HAS_NUMBA
            else None,
        )
    )
    results.append(
        (
            "gradient (11 x 2002)",
            time_kernel(_accel._gradient_numpy, rows, xs, repeats=repeats),
            time_kernel(_accel._gradient_numba, rows, xs, repeats=repeats)
            if _accel.HAS_NUMBA
            else None,
        )
    )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats")
    args = parser.parse_args()
    repeats = 20 if args.quick else 200

    print(f"kernel timings ({repeats} repeats each):")
    for name, t_numpy, t_numba in kernel_benchmarks(repeats):
        line = f"  {name:24s} numpy {t_numpy * 1e6:8.1f} us"
        if t_numba is not None:
            line += f"   numba {t_numba * 1e6:8.1f} us   speedup {t_numpy / t_numba:5.2f}x"
        else:
            line += "   (numba unavailable)"
        print(line)

    intervals = 500 if args.quick else 2001
    pipeline_repeats = 1 if args.quick else 3
    print(f"\nend-to-end pipeline (solve + conserved quantity, N={intervals}):")
    script = PIPELINE.format(intervals=intervals, repeats=pipeline_repeats)
    for backend in ("numpy", "numba"):
        env = dict(os.environ, FUZZYVAR_BACKEND=backend)
        env["PYTHONPATH"] = os.pathsep.join(
            [os.path.join(os.path.dirname(__file__), "..", "src"), env.get("PYTHONPATH", "")]
        )
        proc = subprocess.run(
            [sys.executable, "-c", script], env=env, capture_output=True, text=True
        )
        if proc.returncode:
            print(f"  backend={backend} failed:\n{proc.stderr}")
        else:
            print("  " + proc.stdout.strip())


if __name__ == "__main__":
    main()
