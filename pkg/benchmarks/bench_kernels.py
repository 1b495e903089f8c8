"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 4000000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from twinbeam import _kernels as K


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile / cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4_000_000, help="samples per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    x, a, b, dp, dm, v = rng.standard_normal((6, args.n))
    coef = (0.93, -0.88, -0.95)
    cases = {
        "first_order_filter": (
            lambda: K.first_order_filter_np(*coef, x, 0.0, 0.0),
            lambda: K.first_order_filter_nb(*coef, x, 0.0, 0.0)),
        "balanced_detect": (
            lambda: K.balanced_detect_np(a, b, dp, dm, 0.9, 0.5, 0.5),
            lambda: K.balanced_detect_nb(a, b, dp, dm, 0.9, 0.5, 0.5)),
        "attenuate": (
            lambda: K.attenuate_np(x, v, 0.6084),
            lambda: K.attenuate_nb(x, v, 0.6084)),
    }
    print(f"{'kernel':<20} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, (f_np, f_nb) in cases.items():
        t_np = best_of(f_np, args.repeat)
        t_nb = best_of(f_nb, args.repeat)
        print(f"{name:<20} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
