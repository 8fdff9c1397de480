"""Deterministic per-stream RNG derivation.

Streams are derived from (base_seed, index, ...) tuples through numpy's
SeedSequence entropy hashing, so results never depend on batch order or
scheduling. The generator algorithm is fixed and recorded in output
metadata.
"""

from __future__ import annotations

import numpy as np

GENERATOR = "pcg64"


def derive_rng(base_seed: int, *stream: int) -> np.random.Generator:
    """Generator for the stream identified by (base_seed, *stream)."""
    entropy = (int(base_seed),) + tuple(int(s) for s in stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
