"""Pipeline configuration."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidConfig


@dataclass(frozen=True)
class SsrConfig:
    """All knobs of the randomization pipeline.

    Defaults follow the published operating point: c=1000 for the log
    mapping, noise std 0.3, mean change rate 0.6, std change rate 0.4,
    applied with 50% probability.
    """

    c: float = 1000.0
    sigma_s: float = 0.3
    alpha: float = 0.6
    beta: float = 0.4
    bin_count: int = 256
    apply_probability: float = 0.5
    em_max_iters: int = 200
    em_tolerance: float = 1e-6
    sigma_floor: float = 1e-4

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidConfig(f"c must be > 0, got {self.c}")
        if self.sigma_s < 0:
            raise InvalidConfig(f"sigma_s must be >= 0, got {self.sigma_s}")
        if not (0 <= self.alpha < 1):
            raise InvalidConfig(f"alpha must be in [0, 1), got {self.alpha}")
        if not (0 <= self.beta < 1):
            raise InvalidConfig(f"beta must be in [0, 1), got {self.beta}")
        if not (0 <= self.apply_probability <= 1):
            raise InvalidConfig(
                f"apply_probability must be in [0, 1], got {self.apply_probability}"
            )
        if self.bin_count < 2:
            raise InvalidConfig(f"bin_count must be >= 2, got {self.bin_count}")
        if self.em_max_iters < 1:
            raise InvalidConfig("em_max_iters must be >= 1")
        if not self.em_tolerance > 0:
            raise InvalidConfig("em_tolerance must be > 0")
        if not self.sigma_floor > 0:
            raise InvalidConfig("sigma_floor must be > 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kwargs) -> "SsrConfig":
        return dataclasses.replace(self, **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "SsrConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "SsrConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise InvalidConfig(f"config {path} must hold a JSON object")
        return cls.from_dict(d)


# Weaker noise used when augmenting measured (already noisy) data.
PRESETS = {
    "default": SsrConfig(),
    "measured": SsrConfig(sigma_s=0.2),
}
