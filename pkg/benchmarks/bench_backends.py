#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot kernels (histogram EM fit, per-pixel posteriors) and a
full augmentation. Run after `pip install -e .[jit]`; set
SSRAUG_NO_NUMBA=1 to confirm the fallback path end to end instead.
"""

import time

import numpy as np

from ssraug import SsrConfig, compute_histogram, fit_gmm, ssr_augment
from ssraug._kernels import (
    BACKEND,
    _em_fit_py,
    _pixel_posteriors_py,
    em_fit,
    pixel_posteriors,
)
from ssraug.seeding import derive_rng

CFG = SsrConfig()


def phantom(seed, size=128):
    rng = np.random.default_rng(seed)
    img = rng.normal(0.3, 0.05, (size, size))
    yy, xx = np.mgrid[:size, :size]
    disk = (yy - size // 2) ** 2 + (xx - size // 2) ** 2 <= (size // 6) ** 2
    img[disk] = rng.normal(0.85, 0.04, int(disk.sum()))
    return np.clip(img, 0, 1)


def bench(label, fn, repeats):
    fn()  # warm-up (JIT compile / cache load)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    per_call = (time.perf_counter() - t0) / repeats
    print(f"  {label:<28} {per_call * 1e3:9.3f} ms/call")
    return per_call


def main():
    img = phantom(0)
    hist = compute_histogram(img, CFG.bin_count)
    mu0 = np.array([0.25, 0.45, 0.85])
    sigma0 = np.array([0.1, 0.1, 0.1])
    pi0 = np.array([1 / 3, 1 / 3, 1 / 3])
    em_args = (hist.bin_centers, hist.densities, mu0, sigma0, pi0, 200, 1e-6, 1e-4)
    params = fit_gmm(hist, CFG)
    pixels = img.ravel()
    post_args = (pixels, params.mus, params.sigmas, params.pis)

    print(f"active backend: {BACKEND}")

    print("\nEM fit (256-bin histogram, K=3):")
    t_active = bench(f"{BACKEND} backend", lambda: em_fit(*em_args), 50)
    t_py = bench("numpy fallback", lambda: _em_fit_py(*em_args), 50)
    if BACKEND == "numba":
        print(f"  speedup: {t_py / t_active:.1f}x")

    print("\npixel posteriors (128x128 image):")
    t_active = bench(f"{BACKEND} backend", lambda: pixel_posteriors(*post_args), 200)
    t_py = bench("numpy fallback", lambda: _pixel_posteriors_py(*post_args), 200)
    if BACKEND == "numba":
        print(f"  speedup: {t_py / t_active:.1f}x")

    print("\nfull augmentation (128x128, GMM cached):")
    n = 200
    ssr_augment(img, params, CFG, derive_rng(0, 0))
    t0 = time.perf_counter()
    for i in range(n):
        ssr_augment(img, params, CFG, derive_rng(1, i))
    dt = (time.perf_counter() - t0) / n
    print(f"  {dt * 1e3:9.3f} ms/image  ({1 / dt:.0f} images/s)")


if __name__ == "__main__":
    main()
