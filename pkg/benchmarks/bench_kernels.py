"""Benchmark the compiled kernels against the NumPy fallback.

Run: python benchmarks/bench_kernels.py [--quick]

Sizes mirror the real workloads: a 200^3 reconstruction grid for binning and
hole filling, an ROI-sized crop for region growing, and a full-volume batch
of trilinear samples.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from segbench._kernels import numpy_backend

try:
    from segbench._kernels import _compiled as compiled
except ImportError:
    compiled = None


def timeit(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_bin_mean(n_side: int, samples_per_voxel: float):
    n_vox = n_side**3
    n = int(n_vox * samples_per_voxel)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, n_vox, n)
    vals = rng.normal(size=n)
    order = np.lexsort((vals, idx))
    return (idx[order], vals[order], n_vox), f"bin_mean {n:.2e} samples -> {n_side}^3"


def bench_hole_fill(n_side: int):
    rng = np.random.default_rng(1)
    filled = rng.random((n_side,) * 3) < 0.7
    vals = np.where(filled, rng.normal(size=filled.shape), 0.0)
    return (vals, filled, 7, 2), f"hole_fill {n_side}^3"


def bench_region_grow(n_side: int):
    rng = np.random.default_rng(2)
    vals = rng.normal(size=(n_side,) * 3)
    # carve a growable blob: low-variance sphere around the center
    c = n_side // 2
    z, y, x = np.ogrid[:n_side, :n_side, :n_side]
    blob = (z - c) ** 2 + (y - c) ** 2 + (x - c) ** 2 < (n_side // 3) ** 2
    vals[blob] = rng.normal(0.0, 0.05, size=int(blob.sum()))
    seeds = np.array([[c, c, c]])
    return (vals, seeds, -0.3, 0.3, 26), f"region_grow {n_side}^3 blob"


def bench_trilinear(n_side: int, n_pts: int):
    rng = np.random.default_rng(3)
    vals = rng.normal(size=(n_side,) * 3)
    pts = rng.uniform(-1, n_side, size=(n_pts, 3))
    return (vals, pts), f"trilinear_sample {n_pts:.2e} pts in {n_side}^3"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller sizes")
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return

    side = 80 if args.quick else 200
    roi = 60 if args.quick else 120
    pts = int(2e5) if args.quick else int(2e6)

    cases = [
        ("bin_mean", bench_bin_mean(side, 1.0)),
        ("hole_fill", bench_hole_fill(side)),
        ("region_grow", bench_region_grow(roi)),
        ("trilinear_sample", bench_trilinear(side, pts)),
    ]

    print(f"{'kernel':<18} {'numpy (s)':>12} {'compiled (s)':>12} {'speedup':>9}  workload")
    for name, (call_args, label) in cases:
        t_np, r_np = timeit(getattr(numpy_backend, name), *call_args)
        t_cy, r_cy = timeit(getattr(compiled, name), *call_args)
        _check_equal(name, r_np, r_cy)
        print(f"{name:<18} {t_np:>12.4f} {t_cy:>12.4f} {t_np / t_cy:>8.1f}x  {label}")


def _check_equal(name, a, b):
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            assert np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float), atol=1e-9), name
    else:
        assert np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-9), name


if __name__ == "__main__":
    main()
