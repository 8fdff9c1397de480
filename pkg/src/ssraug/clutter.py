"""Clutter merging, baseline segmentation, and hard-segmentation
ablation variants.

Merging composes a measured chip with an external clutter patch: the
target region is brightness-compensated by the clutter mean offset, the
shadow region passes through, and the clutter region is replaced
wholesale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import SsrConfig
from .errors import (
    DegenerateImage,
    DegenerateHistogram,
    EmptyRegion,
    NoValidCrop,
    ShapeMismatch,
)
from .gmm import fit_gmm, posterior
from .imaging import compute_histogram, validate_intensity


@dataclass(frozen=True)
class RegionMasks:
    """Exhaustive pairwise-disjoint target/shadow/clutter partition."""

    target: np.ndarray
    shadow: np.ndarray
    clutter: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.target, dtype=bool)
        s = np.asarray(self.shadow, dtype=bool)
        c = np.asarray(self.clutter, dtype=bool)
        if not (t.shape == s.shape == c.shape):
            raise ShapeMismatch("mask shapes disagree")
        counts = t.astype(int) + s.astype(int) + c.astype(int)
        if not np.all(counts == 1):
            raise ShapeMismatch("masks must partition every pixel exactly once")
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "shadow", s)
        object.__setattr__(self, "clutter", c)


def baseline_segment(
    img,
    posterior_threshold: float = 0.5,
    shadow_quantile: float = 0.05,
    cfg: SsrConfig | None = None,
) -> RegionMasks:
    """GMM-posterior segmentation with morphological cleanup.

    This is an approximate stand-in for a dedicated SAR segmenter:
    target pixels are those whose target-kernel posterior clears the
    threshold (after closing), shadow pixels sit below a low intensity
    quantile, and clutter is the remainder. Mixture posteriors are a
    weak shadow cue, so treat shadow masks from this routine as rough.
    """
    arr = validate_intensity(img)
    cfg = cfg or SsrConfig()
    if arr.min() == arr.max():
        # no structure at all: everything is clutter
        shape = arr.shape
        return RegionMasks(
            target=np.zeros(shape, dtype=bool),
            shadow=np.zeros(shape, dtype=bool),
            clutter=np.ones(shape, dtype=bool),
        )
    try:
        params = fit_gmm(compute_histogram(arr, cfg.bin_count), cfg)
    except DegenerateHistogram as exc:
        raise DegenerateImage(f"cannot segment: {exc}") from exc
    gamma = posterior(arr.ravel(), params).reshape(arr.shape + (3,))
    target = ndimage.binary_closing(gamma[..., 2] >= posterior_threshold)
    low = np.quantile(arr, shadow_quantile)
    shadow = ndimage.binary_closing(arr <= low) & ~target
    clutter = ~(target | shadow)
    return RegionMasks(target=target, shadow=shadow, clutter=clutter)


def clutter_region_means(img, clutter_patch, masks: RegionMasks):
    """Means of the patch and the image over the clutter mask, and their
    difference d = C̄ - Ī."""
    arr = validate_intensity(img)
    patch = validate_intensity(clutter_patch)
    if arr.shape != patch.shape or arr.shape != masks.clutter.shape:
        raise ShapeMismatch("image, patch, and masks must share one shape")
    if not masks.clutter.any():
        raise EmptyRegion("clutter mask selects no pixels")
    c_bar = float(patch[masks.clutter].mean())
    i_bar = float(arr[masks.clutter].mean())
    return c_bar, i_bar, c_bar - i_bar


def merge_clutter(img, masks: RegionMasks, clutter_patch) -> np.ndarray:
    """Compose: target gets img + d (clipped), shadow passes through,
    clutter region is replaced by the patch exactly."""
    arr = validate_intensity(img)
    patch = validate_intensity(clutter_patch)
    if arr.shape != patch.shape:
        raise ShapeMismatch(f"shape mismatch: {arr.shape} vs {patch.shape}")
    _, _, d = clutter_region_means(arr, patch, masks)
    out = arr.copy()
    out[masks.target] = np.clip(arr[masks.target] + d, 0.0, 1.0)
    out[masks.clutter] = patch[masks.clutter]
    return out


def random_clutter_crop(
    scene,
    height: int,
    width: int,
    rng: np.random.Generator,
    exclusion: np.ndarray | None = None,
    max_retries: int = 1000,
):
    """Uniformly random height*width window from a large clutter scene.

    With an exclusion mask (scene-shaped boolean; True = forbidden,
    e.g. shadow areas), draws are repeated until the window avoids every
    flagged pixel. Returns (patch, (top, left)).
    """
    arr = validate_intensity(scene)
    sh, sw = arr.shape
    if sh < height or sw < width:
        raise ShapeMismatch(f"scene {arr.shape} smaller than crop {(height, width)}")
    if exclusion is not None:
        excl = np.asarray(exclusion, dtype=bool)
        if excl.shape != arr.shape:
            raise ShapeMismatch("exclusion mask must match the scene shape")
    for _ in range(max_retries):
        top = int(rng.integers(0, sh - height + 1))
        left = int(rng.integers(0, sw - width + 1))
        if exclusion is None or not excl[top : top + height, left : left + width].any():
            return arr[top : top + height, left : left + width].copy(), (top, left)
    raise NoValidCrop(f"no crop avoiding exclusions after {max_retries} retries")


def hard_seg_variant1(img, masks: RegionMasks, cfg: SsrConfig, rng: np.random.Generator):
    """Ablation: noise everywhere, then scale clutter-region intensity
    by (1 + Δμ), Δμ ~ U(-α, α); clip to [0, 1]."""
    arr = validate_intensity(img)
    if arr.shape != masks.clutter.shape:
        raise ShapeMismatch("masks do not match image shape")
    noised = arr + rng.normal(0.0, cfg.sigma_s, size=arr.shape)
    delta_mu = float(rng.uniform(-cfg.alpha, cfg.alpha))
    out = noised.copy()
    out[masks.clutter] *= 1.0 + delta_mu
    return np.clip(out, 0.0, 1.0)


def hard_seg_variant2(img, masks: RegionMasks, cfg: SsrConfig, rng: np.random.Generator):
    """Ablation: noise and (1 + Δμ) scaling only outside the target
    region (clutter and shadow, both non-target background); target
    pixels stay bit-identical."""
    arr = validate_intensity(img)
    if arr.shape != masks.clutter.shape:
        raise ShapeMismatch("masks do not match image shape")
    noise = rng.normal(0.0, cfg.sigma_s, size=arr.shape)
    delta_mu = float(rng.uniform(-cfg.alpha, cfg.alpha))
    background = ~masks.target
    out = arr.copy()
    out[background] = np.clip((arr[background] + noise[background]) * (1.0 + delta_mu), 0.0, 1.0)
    return out
