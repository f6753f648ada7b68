"""Compare the compiled and numpy kernel backends on the hot loops.

Usage: python3 benchmarks/bench_kernels.py [--n 8] [--repeat 3]
"""
import argparse
import time

import numpy as np

from relboltz import _backend, carleman
from relboltz import collision_operator as co
from relboltz.cross_section import ScatteringKernel
from relboltz.field import DensityField
from relboltz.kinematics import energy
from relboltz.quadrature import AngularGrid


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n):
    k = ScatteringKernel()
    ang = AngularGrid(8, 16)
    f = DensityField.from_function(lambda x: np.exp(-energy(x)), 4.0, n)
    spec = carleman.QuadratureSpec(2.0, 4, AngularGrid(4, 8), 8, 8, near_subdivision=(2,))
    A = carleman.default_battery(2.0)[0]
    return {
        f"gain_field N={n}": lambda b: co.gain_field(f, f, k, ang, backend=b),
        f"loss_field N={n}": lambda b: co.loss_field(f, k, ang, backend=b),
        "weak_form_direct N=4": lambda b: carleman.weak_form_direct(A, k, spec, backend=b),
        "weak_form_carleman N=4": lambda b: carleman.weak_form_carleman(A, k, spec, backend=b),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=8, help="grid points per axis")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _backend.compiled is None:
        raise SystemExit("compiled kernels are not built; run python3 setup.py build_ext --inplace")
    print(f"{'case':<26s} {'cython s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, fn in cases(args.n).items():
        tc, rc = best_of(lambda: fn("cython"), args.repeat)
        tp, rp = best_of(lambda: fn("numpy"), 1)
        rc, rp = np.asarray(rc, dtype=float), np.asarray(rp, dtype=float)
        diff = float(np.max(np.abs(rc - rp)) / max(np.max(np.abs(rp)), 1e-300))
        print(f"{name:<26s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
