"""Timing comparison of the numpy and numba kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Runs every dual-path kernel on pipeline-representative sizes and prints the
per-call time of each backend plus the speedup. With numba missing or
disabled (SEAMSTITCH_NUMBA=0) only the numpy column is shown.
"""

import argparse
import time

import numpy as np

from seamstitch import kernels


def time_call(fn, *args, repeats: int) -> float:
    fn(*args)  # warm-up / jit compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    canvas = rng.standard_normal((720, 1080))
    k_small = kernels.gaussian_kernel1d(1.0)
    k_wide = kernels.gaussian_kernel1d(25.0)
    src = rng.uniform(0, 255, size=(480, 640, 3))
    qx = rng.uniform(-10, 650, size=(720, 1080))
    qy = rng.uniform(-10, 490, size=(720, 1080))
    lattice = rng.uniform(-20, 20, size=(64, 64))
    gray = rng.uniform(0, 255, size=(480, 640))
    gray[100:300, 200:400] += 90.0
    cov = rng.random((720, 1080)) > 0.02

    cases = [
        ("blur 720x1080 sigma=1", kernels.convolve_separable_numpy,
         getattr(kernels, "convolve_separable_numba", None), (canvas, k_small)),
        ("blur 720x1080 sigma=25", kernels.convolve_separable_numpy,
         getattr(kernels, "convolve_separable_numba", None), (canvas, k_wide)),
        ("bilinear warp 640x480 -> 720x1080", kernels.bilinear_warp_numpy,
         getattr(kernels, "bilinear_warp_numba", None), (src, qx, qy)),
        ("bicubic upsample 64x64 -> 720x1080", kernels.bicubic_upsample_numpy,
         getattr(kernels, "bicubic_upsample_numba", None), (lattice, 720, 1080)),
        ("corner score 640x480", kernels.corner_score_numpy,
         getattr(kernels, "corner_score_numba", None), (gray, 12.0)),
        ("largest rect 720x1080", kernels.largest_true_rect_numpy,
         getattr(kernels, "largest_true_rect_numba", None), (cov,)),
    ]

    have_numba = kernels.USE_NUMBA
    print(f"active backend: {kernels.ACTIVE_BACKEND} (repeats={args.repeats})")
    header = f"{'kernel':<38} {'numpy':>10}"
    if have_numba:
        header += f" {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, np_fn, nb_fn, fn_args in cases:
        t_np = time_call(np_fn, *fn_args, repeats=args.repeats)
        line = f"{name:<38} {t_np * 1e3:>8.2f}ms"
        if have_numba and nb_fn is not None:
            t_nb = time_call(nb_fn, *fn_args, repeats=args.repeats)
            line += f" {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
