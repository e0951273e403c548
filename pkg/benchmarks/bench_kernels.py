"""Compare the compiled and pure-Python geometric kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
Prints the best wall time per kernel for each backend, the speed-up, and
the largest difference between the two results.
"""
import argparse
import time

import numpy as np

from billiardlab import _kernels_py as py
from billiardlab.boundary import oval
from billiardlab.lazutkin import build_chart

try:
    from billiardlab import _ckernels as cy
except ImportError:
    cy = None


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(curve, chart, rng):
    theta = rng.uniform(0.0, 2.0 * np.pi, 20000)
    v = rng.uniform(0.01, 1.5, theta.size)
    delta = rng.uniform(0.01, 3.0, theta.size)
    target = rng.uniform(0.0, 1.0, theta.size) / chart.C1
    rc, rs, gc, gs = curve.rc, curve.rs, chart.gc, chart.gs
    return {
        "series": lambda k: k.series(rc, rs, theta),
        "integrated": lambda k: k.integrated(gc, gs, theta),
        "invert_integrated": lambda k: k.invert_integrated(gc, gs, target),
        "chord": lambda k: k.chord(rc, rs, theta, delta)[0],
        "reflect": lambda k: k.reflect(rc, rs, theta, v)[0],
        "orbit": lambda k: k.orbit(rc, rs, 0.3, 0.05, 20000)[0],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    curve = oval()
    chart = build_chart(curve)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'python [s]':>11} {'cython [s]':>11} {'speed-up':>9} {'max diff':>10}")
    for name, fn in cases(curve, chart, rng).items():
        tp, rp = best_time(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:<18} {tp:11.4f} {'n/a':>11}")
            continue
        tc, rc_ = best_time(lambda: fn(cy), args.repeat)
        diff = float(np.max(np.abs(np.asarray(rp) - np.asarray(rc_))))
        print(f"{name:<18} {tp:11.4f} {tc:11.4f} {tp / tc:9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
