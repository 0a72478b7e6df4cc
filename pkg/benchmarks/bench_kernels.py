#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the NumPy fallback.

Times the raw kernels and a full per-frame feature extraction at a few plane
sizes and prints a side-by-side table:

    python benchmarks/bench_kernels.py [--sizes 192,480] [--repeats 5]
"""

import argparse
import importlib
import time

import numpy as np

from tovqa.kernels import _npkernels, gaussian_kernel1d


def _load_compiled():
    try:
        return importlib.import_module("tovqa.kernels._cykernels")
    except ImportError:
        return None


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def feature_pass(impl, ref, dist):
    """The VIF-style hot loop: moments at four scales plus decimation."""
    r, d = ref, dist
    for s, ksize in enumerate((17, 9, 5, 3)):
        k = gaussian_kernel1d(ksize, ksize / 5.0)
        if s > 0:
            r = impl.convolve_sep_valid(r, k)[::2, ::2]
            d = impl.convolve_sep_valid(d, k)[::2, ::2]
        for plane in (r, d, r * r, d * d, r * d):
            impl.convolve_sep_valid(plane, k)
    impl.mean_abs_diff(ref, dist)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="128,256,512")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    compiled = _load_compiled()
    backends = [("numpy", _npkernels)] + ([("compiled", compiled)] if compiled else [])
    if compiled is None:
        print("compiled extension not built; showing the fallback only\n")

    rng = np.random.default_rng(0)
    header = f"{'benchmark':<28}" + "".join(f"{name:>12}" for name, _ in backends)
    if compiled is not None:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for size in (int(s) for s in args.sizes.split(",")):
        ref = rng.uniform(0, 255, (size, size))
        dist = np.clip(ref + rng.normal(0, 8, ref.shape), 0, 255)
        k17 = gaussian_kernel1d(17, 3.4)
        rows = [
            (f"conv 17x17 sep {size}px", lambda impl: impl.convolve_sep_valid(ref, k17)),
            (f"downsample 2x2 {size}px", lambda impl: impl.downsample2x2_mean(ref)),
            (f"mean abs diff {size}px", lambda impl: impl.mean_abs_diff(ref, dist)),
            (f"vif-style pass {size}px", lambda impl: feature_pass(impl, ref, dist)),
        ]
        for label, fn in rows:
            times = [time_call(fn, impl, repeats=args.repeats) for _, impl in backends]
            line = f"{label:<28}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
            if len(times) == 2 and times[1] > 0:
                line += f"{times[0] / times[1]:>9.1f}x"
            print(line)
        print()


if __name__ == "__main__":
    main()
