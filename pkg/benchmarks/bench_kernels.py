"""Time the hot kernels under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--sizes 1000 4000]

Prints one row per (kernel, size) with the best wall time of each backend,
the speedup and the largest relative difference between the two results.
"""
import argparse
import time

import numpy as np

from clifford_orlicz import _accel
from clifford_orlicz.kernels import difference_quotient_sum, vector_kernel_sum
from clifford_orlicz.orlicz import ExpMinusOne, PowerOverP


def best_time(fn, repeat):
    fn()  # warm-up (numba compiles on first call)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(sizes, rng):
    for n in sizes:
        pts = rng.standard_normal((n, 2))
        vals = rng.standard_normal((n, 4))
        w = rng.random(n)
        yield f"volume kernel 2d N={n}", lambda p=pts, v=vals, w=w: vector_kernel_sum(p, p, v, w, 0.1, 1e-3)
        m = max(64, n // 8)
        x = rng.standard_normal((m, 3))
        g = rng.standard_normal((m, 8))
        wm = rng.random(m)
        for psi in (PowerOverP(2), ExpMinusOne()):
            yield (
                f"boundary double sum {psi.kind} M={m}",
                lambda x=x, g=g, w=wm, psi=psi: difference_quotient_sum(x, g, w, 1.0, psi),
            )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000])
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'case':42s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    prev = _accel.backend()
    try:
        for name, fn in cases(args.sizes, rng):
            _accel.set_backend("numba")
            tn, a = best_time(fn, args.repeat)
            _accel.set_backend("numpy")
            tp, b = best_time(fn, args.repeat)
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(np.max(np.abs(b)), 1e-300))
            print(f"{name:42s} {tn:10.4f} {tp:10.4f} {tp / tn:8.2f} {diff:13.1e}")
    finally:
        _accel.set_backend(prev)


if __name__ == "__main__":
    main()
