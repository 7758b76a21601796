"""Compare the compiled and pure-Python stepping kernels.

Usage: python3 benchmarks/bench_kernels.py [--horizon T] [--step h] [--repeat n]
"""
import argparse
import time

import numpy as np

from delayosc import integrator
from delayosc.examples import make_xs
from delayosc.fnspec import Equation, PiecewiseFn
from delayosc.integrator import History, integrate


def cases():
    lag = Equation.build(PiecewiseFn.constant(1.2), PiecewiseFn.lag(1.0))
    yield "constant lag", lag, History.constant(1.0, -1.0, 0.0)
    ex = make_xs(9.0 / 8.0)
    start = ex.history_start(0.0)
    yield "x_s(s=9/8)", ex.eq, History.from_function(ex.solution, start, 0.0, 1e-3, ex.kinks(start, 0.0))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--horizon", type=float, default=200.0)
    parser.add_argument("--step", type=float, default=1e-3)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = ["python"] + (["ext"] if integrator._kernels_ext is not None else [])
    print(f"default backend: {integrator.BACKEND}; horizon {args.horizon}, step {args.step}")
    print(f"{'case':<16}{'backend':<10}{'steps':>10}{'seconds':>12}{'speedup':>10}")
    for name, eq, hist in cases():
        ref = None
        for backend in backends:
            secs, x = best_of(lambda: integrate(eq, hist, args.horizon, args.step, backend=backend), args.repeat)
            if ref is None:
                ref = (secs, x.values)
            else:
                assert np.array_equal(ref[1], x.values), "backends disagree"
            steps = x.times.size - x.i0 - 1
            print(f"{name:<16}{backend:<10}{steps:>10}{secs:>12.4f}{ref[0] / secs:>9.1f}x")


if __name__ == "__main__":
    main()
