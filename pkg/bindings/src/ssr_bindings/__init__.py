"""Array-in / array-out bindings for the ssraug pipeline.

Meant for embedding in dataloaders: no file IO, plain dict results, and
bit-for-bit agreement with the `ssraug augment` CLI for the same seed.
Config keyword arguments mirror SsrConfig field names exactly.
"""

from __future__ import annotations

import numpy as np

import ssraug
from ssraug.errors import InvalidConfig, InvalidImage

__version__ = "0.1.0"

__all__ = ["fit_gmm", "ssr_augment"]


def _build_config(config: dict) -> ssraug.SsrConfig:
    try:
        return ssraug.SsrConfig(**config)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from exc


def _validate_array(array) -> np.ndarray:
    arr = np.array(array, dtype=np.float64)  # always copy: never touch the caller's buffer
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidImage(f"expected a non-empty 2-D array, got shape {arr.shape}")
    return arr


def fit_gmm(array, **config) -> dict:
    """Fit the 3-kernel intensity mixture to a [0,1] image.

    Returns the parameter dict ({"kernels": [{"mu", "sigma", "pi"}, ...],
    "nll", "iterations"}), the same schema the CLI writes to .gmm.json
    sidecars.
    """
    cfg = _build_config(config)
    arr = _validate_array(array)
    hist = ssraug.compute_histogram(arr, cfg.bin_count)
    return ssraug.fit_gmm(hist, cfg).to_dict()


def ssr_augment(array, seed=None, **config) -> np.ndarray:
    """Augment one [0,1] image; returns a new float64 array.

    With an integer seed the result is byte-identical (at f32 storage
    resolution) to `ssraug augment --replicas 1 --seed SEED` on the same
    image; seed=None draws a fresh unpredictable seed. The apply
    probability is honored: a replica may be returned unmodified.
    """
    cfg = _build_config(config)
    arr = _validate_array(array)
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1)[0])
    hist = ssraug.compute_histogram(arr, cfg.bin_count)
    params = ssraug.fit_gmm(hist, cfg)
    rng = ssraug.derive_rng(seed, 0, 0)
    if rng.random() < cfg.apply_probability:
        return ssraug.ssr_augment(arr, params, cfg, rng)
    return arr
