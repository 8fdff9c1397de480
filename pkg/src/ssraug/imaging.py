"""Core image operations: dynamic-range compression and histograms.

Images are plain 2-D float64 numpy arrays. Amplitude images hold
non-negative linear-scale samples; intensity images hold values in
[0, 1] produced by the log mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImage, InvalidConfig, InvalidImage


def as_image(values, name: str = "image") -> np.ndarray:
    """Coerce to a 2-D float64 array and check finiteness."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidImage(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidImage(f"{name} contains non-finite values")
    return arr


def validate_amplitude(a) -> np.ndarray:
    arr = as_image(a, "amplitude image")
    if np.any(arr < 0):
        raise InvalidImage("amplitude image contains negative values")
    return arr


def validate_intensity(img) -> np.ndarray:
    arr = as_image(img, "intensity image")
    if np.any(arr < 0) or np.any(arr > 1):
        raise InvalidImage("intensity image has values outside [0, 1]")
    return arr


def min_max_normalize(a) -> np.ndarray:
    """Affinely map an amplitude image onto [0, 1].

    Raises DegenerateImage for constant input: there is no valid
    normalization and downstream mixture fitting would be meaningless.
    """
    arr = validate_amplitude(a)
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        raise DegenerateImage("constant image cannot be min-max normalized")
    return (arr - lo) / (hi - lo)


def log_map(a, c: float) -> np.ndarray:
    """Compress dynamic range: I = log10(1 + c*A) / log10(1 + c).

    Expects A already normalized to [0, 1]; output is in [0, 1] and
    strictly increasing in A. This turns multiplicative speckle into an
    additive perturbation.
    """
    if not c > 0:
        raise InvalidConfig(f"log mapping requires c > 0, got {c}")
    arr = validate_amplitude(a)
    out = np.log10(1.0 + c * arr) / np.log10(1.0 + c)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class Histogram:
    """Uniformly binned empirical intensity distribution over [0, 1]."""

    bin_centers: np.ndarray  # (M,), center m at (m - 0.5)/M
    densities: np.ndarray    # (M,), non-negative, sums to 1

    @property
    def bin_count(self) -> int:
        return self.bin_centers.size


def compute_histogram(img, bin_count: int) -> Histogram:
    """Bin an intensity image into `bin_count` uniform bins over [0, 1].

    Bin m covers [(m-1)/M, m/M); a pixel at exactly 1.0 lands in the
    last bin so no mass is dropped.
    """
    if bin_count < 2:
        raise InvalidConfig(f"bin_count must be >= 2, got {bin_count}")
    arr = validate_intensity(img)
    idx = np.minimum((arr * bin_count).astype(np.int64), bin_count - 1)
    counts = np.bincount(idx.ravel(), minlength=bin_count).astype(np.float64)
    densities = counts / counts.sum()
    centers = (np.arange(bin_count, dtype=np.float64) + 0.5) / bin_count
    return Histogram(bin_centers=centers, densities=densities)
