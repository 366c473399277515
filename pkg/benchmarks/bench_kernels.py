"""Time each hot kernel under the numba and the pure-numpy backend.

    python benchmarks/bench_kernels.py [--n 128] [--repeat 5]

The package picks one backend at import time (set HQTLP_DISABLE_NUMBA=1 to
force numpy); this script calls both implementations directly so they can be
compared in one process. Numba compilation happens in a warm-up call and is
excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from hqtlp import _kernels as K


def cases(n: int, rng: np.random.Generator):
    a = np.triu(rng.uniform(0, 100, (n, n)) * (rng.random((n, n)) < 0.2), 1)
    a = a + a.T
    b = np.triu(rng.uniform(0, 100, (n, n)) * (rng.random((n, n)) < 0.2), 1)
    b = b + b.T
    T, slots = 1000, n * (n - 1) // 20
    level = rng.standard_normal((T, slots))
    eps = rng.standard_normal((T, slots))
    reset = rng.random((T, slots)) < 0.01
    size = 500_000
    adam = [rng.standard_normal(size) for _ in range(3)] + [np.abs(rng.standard_normal(size))]
    raw = rng.standard_normal((n, n))
    return {
        "gcn_normalize": (a,),
        "symmetrize_clean": (raw,),
        "pair_stats": (a, b, 1.0),
        "log_walk": (level, eps, reset, 0.3, 0.35),
        "heatmap_rgb": (a, float(a.max())),
        "adam_update": (*adam, 1e-3, 0.9, 0.999, 1e-8, 0.5, 0.1),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"n={args.n}  active backend: {K.BACKEND}")
    print(f"{'kernel':18s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, call_args in cases(args.n, rng).items():
        fast = getattr(K, f"{name}_numba")
        slow = getattr(K, f"{name}_numpy")
        fast(*call_args)  # compile
        times = []
        for fn in (fast, slow):
            t = timeit.Timer(lambda: fn(*call_args))
            loops, _ = t.autorange()
            times.append(min(t.repeat(args.repeat, loops)) / loops * 1e3)
        print(f"{name:18s} {times[0]:10.4f} {times[1]:10.4f} {times[1] / times[0]:7.2f}x")


if __name__ == "__main__":
    main()
