"""Dataset-level statistics: soft clutter moments, population
comparisons, and mixture-size NLL sweeps."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import ks_2samp

from .config import SsrConfig
from .errors import EmptyPopulation, NoClutterMass
from .gmm import (
    GaussianKernel,
    GmmParams,
    default_init,
    fit_gmm,
    mixture_density,
    posterior,
)
from .imaging import Histogram, validate_intensity

REPORT_BINS = 32

# weight mass below this fraction of the pixel count means the posterior
# sees essentially no clutter and the moments are unstable
MIN_CLUTTER_MASS_FRACTION = 0.01


@dataclass(frozen=True)
class ImageStats:
    """Per-image moments; clutter moments use soft posterior weights
    w(p) = γ_C1(p) + γ_C2(p)."""

    clutter_mean: float
    clutter_std: float
    global_mean: float
    global_std: float
    masked_clutter_mean: float | None = None
    masked_clutter_std: float | None = None
    path: str | None = None


def image_stats(img, params: GmmParams, masks=None, path: str | None = None) -> ImageStats:
    """Posterior-weighted clutter moments plus global moments.

    When region masks are supplied, hard mask-based clutter moments are
    emitted alongside for cross-checking.
    """
    arr = validate_intensity(img)
    values = arr.ravel()
    gamma = posterior(values, params)
    weights = gamma[:, 0] + gamma[:, 1]
    mass = float(weights.sum())
    if mass < MIN_CLUTTER_MASS_FRACTION * values.size:
        raise NoClutterMass(
            f"soft clutter mass {mass:.3g} below 1% of {values.size} pixels"
        )
    cmean = float(np.dot(weights, values) / mass)
    cvar = float(np.dot(weights, (values - cmean) ** 2) / mass)
    masked_mean = masked_std = None
    if masks is not None and masks.clutter.any():
        sel = arr[masks.clutter]
        masked_mean = float(sel.mean())
        masked_std = float(sel.std())
    return ImageStats(
        clutter_mean=cmean,
        clutter_std=float(np.sqrt(max(cvar, 0.0))),
        global_mean=float(values.mean()),
        global_std=float(values.std()),
        masked_clutter_mean=masked_mean,
        masked_clutter_std=masked_std,
        path=path,
    )


@dataclass(frozen=True)
class PopulationReport:
    hist_bin_edges: np.ndarray
    hist_clutter_mean_a: np.ndarray
    hist_clutter_mean_b: np.ndarray
    hist_clutter_std_a: np.ndarray
    hist_clutter_std_b: np.ndarray
    ks_clutter_mean: float
    ks_clutter_std: float

    def to_dict(self) -> dict:
        return {
            "hist_bin_edges": self.hist_bin_edges.tolist(),
            "hist_clutter_mean_a": self.hist_clutter_mean_a.tolist(),
            "hist_clutter_mean_b": self.hist_clutter_mean_b.tolist(),
            "hist_clutter_std_a": self.hist_clutter_std_a.tolist(),
            "hist_clutter_std_b": self.hist_clutter_std_b.tolist(),
            "ks_clutter_mean": self.ks_clutter_mean,
            "ks_clutter_std": self.ks_clutter_std,
        }


def _ks(a: np.ndarray, b: np.ndarray) -> float:
    if np.array_equal(np.sort(a), np.sort(b)):
        return 0.0
    return float(ks_2samp(a, b, method="asymp").statistic)


def population_report(stats_a: list[ImageStats], stats_b: list[ImageStats]) -> PopulationReport:
    """Binned histograms and two-sample KS statistics for the clutter
    mean/std distributions of two image populations."""
    if not stats_a or not stats_b:
        raise EmptyPopulation("both populations must be non-empty")
    mean_a = np.array([s.clutter_mean for s in stats_a])
    mean_b = np.array([s.clutter_mean for s in stats_b])
    std_a = np.array([s.clutter_std for s in stats_a])
    std_b = np.array([s.clutter_std for s in stats_b])
    edges = np.linspace(0.0, 1.0, REPORT_BINS + 1)
    return PopulationReport(
        hist_bin_edges=edges,
        hist_clutter_mean_a=np.histogram(mean_a, bins=edges)[0],
        hist_clutter_mean_b=np.histogram(mean_b, bins=edges)[0],
        hist_clutter_std_a=np.histogram(std_a, bins=edges)[0],
        hist_clutter_std_b=np.histogram(std_b, bins=edges)[0],
        ks_clutter_mean=_ks(mean_a, mean_b),
        ks_clutter_std=_ks(std_a, std_b),
    )


def write_stats_csv(path: str | Path, stats: list[ImageStats]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["path", "clutter_mean", "clutter_std", "global_mean", "global_std"]
        )
        for s in stats:
            writer.writerow(
                [s.path or "", s.clutter_mean, s.clutter_std, s.global_mean, s.global_std]
            )


def write_report_json(path: str | Path, report: PopulationReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)


def _nested_init(hist: Histogram, prev: GmmParams, n_kernels: int) -> list[GaussianKernel]:
    """Grow a previous fit by placing extra kernels at the bins the
    current mixture underfits most."""
    kernels = list(prev.kernels)
    extra = n_kernels - len(kernels)
    model = mixture_density(hist.bin_centers, prev)
    model = model / max(model.sum(), 1e-300)
    residual = hist.densities - model
    order = np.argsort(residual)[::-1]
    sigma0 = max(float(np.mean([k.sigma for k in kernels])), 1e-3)
    for i in range(extra):
        center = float(hist.bin_centers[order[i % order.size]])
        kernels.append(GaussianKernel(mu=center, sigma=sigma0, pi=0.05))
    total = sum(k.pi for k in kernels)
    return [GaussianKernel(k.mu, k.sigma, k.pi / total) for k in kernels]


def nll_kernel_sweep(hist: Histogram, k_values: list[int], cfg: SsrConfig):
    """Converged NLL per kernel count.

    Kernel counts are processed in ascending order with nested
    initialization candidates, so the recorded NLL is non-increasing in
    K: a larger mixture always scores at least as well as the best
    smaller one (a zero-weight extension of the smaller fit is always a
    candidate).
    """
    results: dict[int, tuple[float, GmmParams]] = {}
    prev: GmmParams | None = None
    for k in sorted(set(int(v) for v in k_values)):
        candidates = []
        params = fit_gmm(hist, cfg, n_kernels=k)
        candidates.append((params.nll, params))
        if prev is not None and len(prev.kernels) < k:
            nested = fit_gmm(hist, cfg, n_kernels=k, init=_nested_init(hist, prev, k))
            candidates.append((nested.nll, nested))
            # zero-weight extension of the previous best: same NLL by
            # construction, guarantees monotone sweep results
            padded = GmmParams(
                kernels=prev.kernels
                + tuple(
                    GaussianKernel(mu=0.5, sigma=1.0, pi=0.0)
                    for _ in range(k - len(prev.kernels))
                ),
                nll=prev.nll,
                iterations=0,
            )
            candidates.append((prev.nll, padded))
        best_nll, best = min(candidates, key=lambda t: t[0])
        results[k] = (best_nll, best)
        prev = best
    return [(k, results[k][0]) for k in sorted(results)]
