"""Time the numba kernels against their numpy fallbacks.

Both variants are called directly, so the MEDLINK_DISABLE_NUMBA flag does
not matter here.  The first numba call (compilation) is excluded.

    python3 benchmarks/bench_kernels.py --points 20000 --segments 512
"""
import argparse
import time

import numpy as np

from medlink import _kernels as K

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def _soup(n_seg, rng):
    t = np.sort(rng.uniform(0, 2 * np.pi, n_seg))
    r = 1 + 0.2 * np.cos(3 * t)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return np.ascontiguousarray(pts), np.ascontiguousarray(np.roll(pts, -1, axis=0))


def _best_of(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--segments", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    a, b = _soup(args.segments, rng)
    pts = np.ascontiguousarray(rng.uniform(-1.5, 1.5, (args.points, 2)))
    dirs = rng.normal(size=(args.points, 2))
    dirs = np.ascontiguousarray(dirs / np.hypot(*dirs.T)[:, None])
    cases = {
        "nearest_on_segments": ("_nearest_on_segments", (pts, a, b)),
        "crossing_parity": ("_crossing_parity", (pts, a, b)),
        "ray_hits": ("_ray_hits", (pts, dirs, a, b, 1e-9)),
        "proper_crossings": ("_proper_crossings", (a, b, 1e-9)),
    }
    print(f"points={args.points} segments={args.segments} (best of {args.repeat})")
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  agree")
    for name, (stem, call) in cases.items():
        f_np = getattr(K, stem + "_np")
        t_np = _best_of(f_np, call, args.repeat)
        if numba is None:
            print(f"{name:<22}{t_np:>12.4f}{'n/a':>12}{'':>10}")
            continue
        f_nb = numba.njit(cache=True)(getattr(K, stem + "_nb"))
        f_nb(*call)  # compile
        t_nb = _best_of(f_nb, call, args.repeat)
        r_np, r_nb = f_np(*call), f_nb(*call)
        if isinstance(r_np, tuple):
            agree = all(np.allclose(x, y, equal_nan=True) for x, y in zip(r_np, r_nb))
        else:
            agree = np.array_equal(np.asarray(r_np), np.asarray(r_nb))
        print(f"{name:<22}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x  {agree}")


if __name__ == "__main__":
    main()
