"""The randomization pipeline: noise, kernel adjustment, sampling,
histogram matching, and batch orchestration.

Pipeline order per image: add Gaussian noise, draw one (Δμ, Δσ) pair,
scale the two clutter kernels, sample a fresh image from the adjusted
mixture, then histogram-match the noised image onto the sampled values
and clip once to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SsrConfig
from .errors import InvalidConfig, ShapeMismatch
from .gmm import GaussianKernel, GmmParams, fit_gmm
from .imaging import compute_histogram, validate_intensity
from .seeding import derive_rng


@dataclass(frozen=True)
class KernelDeltas:
    """One uniform draw of clutter-kernel change rates."""

    delta_mu: float
    delta_sigma: float


@dataclass(frozen=True)
class AugmentMeta:
    applied: bool
    delta_mu: float | None
    delta_sigma: float | None
    sigma_s: float
    gmm: GmmParams | None


def add_noise(img, sigma_s: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. Gaussian(0, sigma_s²) noise per pixel.

    The result is intentionally not clipped; ranks are all that matter
    downstream and clipping happens once at pipeline end.
    """
    if sigma_s < 0:
        raise InvalidConfig(f"sigma_s must be >= 0, got {sigma_s}")
    arr = validate_intensity(img)
    return arr + rng.normal(0.0, sigma_s, size=arr.shape)


def draw_deltas(alpha: float, beta: float, rng: np.random.Generator) -> KernelDeltas:
    """Draw Δμ ~ U(-α, α) and Δσ ~ U(-β, β)."""
    if not (0 <= alpha < 1) or not (0 <= beta < 1):
        raise InvalidConfig(f"alpha/beta must be in [0, 1), got {alpha}, {beta}")
    return KernelDeltas(
        delta_mu=float(rng.uniform(-alpha, alpha)),
        delta_sigma=float(rng.uniform(-beta, beta)),
    )


def adjust_kernels(
    params: GmmParams, deltas: KernelDeltas, sigma_floor: float = 1e-4
) -> GmmParams:
    """Scale the two clutter kernels by the same (Δμ, Δσ) pair.

    The target kernel (highest mean, last position) is left untouched;
    mixing coefficients never change.
    """
    c1, c2, *rest = params.kernels
    adjusted = []
    for k in (c1, c2):
        adjusted.append(
            GaussianKernel(
                mu=k.mu * (1.0 + deltas.delta_mu),
                sigma=max(k.sigma * (1.0 + deltas.delta_sigma), sigma_floor),
                pi=k.pi,
            )
        )
    return GmmParams(
        kernels=tuple(adjusted) + tuple(rest),
        nll=params.nll,
        iterations=params.iterations,
    )


def sample_mixture(
    params: GmmParams, height: int, width: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw height*width i.i.d. samples from the mixture, clipped to [0, 1]."""
    pis = params.pis
    pis = pis / pis.sum()
    n = height * width
    ks = rng.choice(len(params.kernels), size=n, p=pis)
    values = rng.normal(params.mus[ks], params.sigmas[ks])
    return np.clip(values, 0.0, 1.0).reshape(height, width)


def histogram_match(source, reference) -> np.ndarray:
    """Rank-based exact histogram specification.

    The output takes its value multiset from the reference and its
    spatial rank ordering from the source; ties in the source break by
    row-major pixel index. Output is clipped to [0, 1].
    """
    src = np.asarray(source, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if src.size != ref.size:
        raise ShapeMismatch(f"pixel counts differ: {src.size} vs {ref.size}")
    order = np.argsort(src.ravel(), kind="stable")
    out = np.empty(src.size, dtype=np.float64)
    out[order] = np.sort(ref.ravel(), kind="stable")
    return np.clip(out.reshape(src.shape), 0.0, 1.0)


def ssr_augment(
    img,
    params: GmmParams,
    cfg: SsrConfig,
    rng: np.random.Generator,
    deltas: KernelDeltas | None = None,
    return_meta: bool = False,
):
    """Full randomization of one image. `params` must be fitted on the
    clean image; `deltas` can be pinned for diagnostics, otherwise one
    pair is drawn from `rng`."""
    arr = validate_intensity(img)
    noised = add_noise(arr, cfg.sigma_s, rng)
    if deltas is None:
        deltas = draw_deltas(cfg.alpha, cfg.beta, rng)
    adjusted = adjust_kernels(params, deltas, cfg.sigma_floor)
    sampled = sample_mixture(adjusted, arr.shape[0], arr.shape[1], rng)
    out = histogram_match(noised, sampled)
    if return_meta:
        meta = AugmentMeta(
            applied=True,
            delta_mu=deltas.delta_mu,
            delta_sigma=deltas.delta_sigma,
            sigma_s=cfg.sigma_s,
            gmm=params,
        )
        return out, meta
    return out


def augment_image(
    img,
    cfg: SsrConfig,
    rng: np.random.Generator,
    params: GmmParams | None = None,
):
    """Apply-or-passthrough step for one image.

    The apply decision is the first draw from the stream, so the
    decision and the augmentation are reproducible together.
    Returns (image, AugmentMeta).
    """
    arr = validate_intensity(img)
    applied = rng.random() < cfg.apply_probability
    if not applied:
        return arr.copy(), AugmentMeta(False, None, None, cfg.sigma_s, params)
    if params is None:
        params = fit_gmm(compute_histogram(arr, cfg.bin_count), cfg)
    out, meta = ssr_augment(arr, params, cfg, rng, return_meta=True)
    return out, meta


def augment_batch(images, cfg: SsrConfig, base_seed: int) -> list[np.ndarray]:
    """Augment a batch with per-image derived streams.

    Each image's stream depends only on (base_seed, index), so batch
    order and parallelism never change results.
    """
    out = []
    for index, img in enumerate(images):
        rng = derive_rng(base_seed, index)
        result, _ = augment_image(img, cfg, rng)
        out.append(result)
    return out
