"""Three-kernel Gaussian mixture fitting on intensity histograms.

The mixture is fitted to histogram bin centers with each bin weighted by
its density, which is equivalent to pixel-level EM up to binning. The
two low-mean kernels capture clutter/shadow intensity, the high-mean
kernel the target region.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .config import SsrConfig
from .errors import DegenerateHistogram, InvalidConfig
from .imaging import Histogram

# Quantile levels used to seed kernel means for the standard 3-kernel
# fit. The high 0.9 level biases the third kernel toward the bright
# target mode.
_INIT_QUANTILES_3 = (0.25, 0.50, 0.90)


@dataclass(frozen=True)
class GaussianKernel:
    mu: float
    sigma: float
    pi: float


@dataclass(frozen=True)
class GmmParams:
    """Fitted mixture: kernels sorted ascending by mean, plus fit info."""

    kernels: tuple[GaussianKernel, ...]
    nll: float
    iterations: int

    @property
    def mus(self) -> np.ndarray:
        return np.array([k.mu for k in self.kernels])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([k.sigma for k in self.kernels])

    @property
    def pis(self) -> np.ndarray:
        return np.array([k.pi for k in self.kernels])

    def to_dict(self) -> dict:
        return {
            "kernels": [{"mu": k.mu, "sigma": k.sigma, "pi": k.pi} for k in self.kernels],
            "nll": self.nll,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "GmmParams":
        kernels = tuple(
            GaussianKernel(mu=k["mu"], sigma=k["sigma"], pi=k["pi"]) for k in d["kernels"]
        )
        return cls(kernels=kernels, nll=d["nll"], iterations=d["iterations"])

    @classmethod
    def from_json_file(cls, path: str | Path) -> "GmmParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def gaussian_pdf(b: float, kernel: GaussianKernel) -> float:
    """Normal density at b."""
    z = (b - kernel.mu) / kernel.sigma
    return math.exp(-0.5 * z * z) / (kernel.sigma * math.sqrt(2.0 * math.pi))


def mixture_density(b, params: GmmParams):
    """Mixture pdf Σ_k π_k N(b | μ_k, σ_k²); accepts scalars or arrays."""
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros_like(b)
    for k in params.kernels:
        z = (b - k.mu) / k.sigma
        out = out + k.pi * np.exp(-0.5 * z * z) / (k.sigma * math.sqrt(2.0 * math.pi))
    if out.ndim == 0:
        return float(out)
    return out


def mixture_cdf(b, params: GmmParams):
    """Mixture CDF; accepts scalars or arrays."""
    from scipy.stats import norm

    b = np.asarray(b, dtype=np.float64)
    out = np.zeros_like(b)
    for k in params.kernels:
        out = out + k.pi * norm.cdf(b, loc=k.mu, scale=k.sigma)
    if out.ndim == 0:
        return float(out)
    return out


def posterior(b, params: GmmParams) -> np.ndarray:
    """Responsibilities γ_k(b); rows sum to 1.

    If every weighted component density underflows, responsibilities
    fall back to uniform.
    """
    values = np.atleast_1d(np.asarray(b, dtype=np.float64))
    gamma = _kernels.pixel_posteriors(values, params.mus, params.sigmas, params.pis)
    if np.asarray(b).ndim == 0:
        return gamma[0]
    return gamma


def negative_log_likelihood(hist: Histogram, params: GmmParams) -> float:
    """Density-weighted NLL of the histogram under the mixture.

    Returns +inf if any bin with mass has zero mixture density.
    """
    density = mixture_density(hist.bin_centers, params)
    support = hist.densities > 0
    if np.any(density[support] <= 0):
        return math.inf
    return -float(np.dot(hist.densities[support], np.log(density[support])))


def _histogram_quantile(hist: Histogram, q: float) -> float:
    cdf = np.cumsum(hist.densities)
    idx = int(np.searchsorted(cdf, q, side="left"))
    idx = min(idx, hist.bin_count - 1)
    return float(hist.bin_centers[idx])


def _histogram_std(hist: Histogram) -> float:
    mean = float(np.dot(hist.densities, hist.bin_centers))
    var = float(np.dot(hist.densities, (hist.bin_centers - mean) ** 2))
    return math.sqrt(max(var, 0.0))


def default_init(hist: Histogram, n_kernels: int = 3) -> list[GaussianKernel]:
    """Deterministic initialization from the histogram CDF."""
    if n_kernels == 3:
        levels = _INIT_QUANTILES_3
    else:
        levels = tuple((i + 0.5) / n_kernels for i in range(n_kernels))
    sigma0 = max(_histogram_std(hist), 1e-3)
    return [
        GaussianKernel(mu=_histogram_quantile(hist, q), sigma=sigma0, pi=1.0 / n_kernels)
        for q in levels
    ]


def _peak_init(hist: Histogram, n_kernels: int) -> list[GaussianKernel] | None:
    """Seed kernels at the n_kernels tallest local maxima of the lightly
    smoothed histogram; None if the histogram has too few peaks."""
    from scipy.signal import find_peaks

    smoothed = np.convolve(hist.densities, np.ones(5) / 5.0, mode="same")
    peaks, props = find_peaks(smoothed, height=0)
    if len(peaks) < n_kernels:
        return None
    top = np.sort(peaks[np.argsort(props["peak_heights"])[::-1][:n_kernels]])
    mus = hist.bin_centers[top]
    assign = np.argmin(np.abs(hist.bin_centers[:, None] - mus[None, :]), axis=1)
    kernels = []
    for k in range(n_kernels):
        w = hist.densities * (assign == k)
        mass = float(w.sum())
        if mass <= 0:
            return None
        mean = float(np.dot(w, hist.bin_centers)) / mass
        var = float(np.dot(w, (hist.bin_centers - mean) ** 2)) / mass
        kernels.append(GaussianKernel(mu=mean, sigma=max(math.sqrt(var), 1e-3), pi=mass))
    total = sum(k.pi for k in kernels)
    return [GaussianKernel(k.mu, k.sigma, k.pi / total) for k in kernels]


def _restart_inits(hist: Histogram, n_kernels: int, restarts: int):
    """Deterministic extra initializations: the peak-seeded init first,
    then seeded random inits."""
    inits = []
    peak = _peak_init(hist, n_kernels)
    if peak is not None:
        inits.append(peak)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((9618, n_kernels))))
    while len(inits) < restarts:
        pis = rng.dirichlet(np.ones(n_kernels))
        inits.append(
            [
                GaussianKernel(
                    mu=float(rng.uniform(0.0, 1.0)),
                    sigma=float(rng.uniform(0.01, 0.2)),
                    pi=float(p),
                )
                for p in pis
            ]
        )
    return inits[:restarts]


def fit_gmm(
    hist: Histogram,
    cfg: SsrConfig,
    n_kernels: int = 3,
    init: list[GaussianKernel] | None = None,
    return_trace: bool = False,
    restarts: int = 0,
):
    """Fit an n-kernel mixture to the histogram via weighted EM.

    Returns GmmParams with kernels sorted ascending by mean; with
    return_trace=True returns (params, nll_trace) where the trace holds
    the NLL at initialization and after every M-step.

    restarts adds that many extra deterministic initializations (a
    peak-seeded one, then seeded random ones) and keeps the lowest-NLL
    fit; 0 keeps the single quantile-based initialization.
    """
    if n_kernels < 1:
        raise InvalidConfig(f"n_kernels must be >= 1, got {n_kernels}")
    if int(np.count_nonzero(hist.densities)) < max(3, n_kernels):
        raise DegenerateHistogram(
            f"need at least {max(3, n_kernels)} non-empty bins to fit {n_kernels} kernels"
        )
    if restarts < 0:
        raise InvalidConfig(f"restarts must be >= 0, got {restarts}")
    if init is None:
        init = default_init(hist, n_kernels)
    if len(init) != n_kernels:
        raise InvalidConfig(f"init must supply {n_kernels} kernels, got {len(init)}")

    if restarts > 0:
        best = None
        for candidate in [init, *_restart_inits(hist, n_kernels, restarts)]:
            fitted = fit_gmm(hist, cfg, n_kernels, candidate, return_trace=True)
            if best is None or fitted[0].nll < best[0].nll:
                best = fitted
        return best if return_trace else best[0]

    mu0 = np.array([k.mu for k in init], dtype=np.float64)
    sigma0 = np.array([k.sigma for k in init], dtype=np.float64)
    pi0 = np.array([k.pi for k in init], dtype=np.float64)
    pi0 = pi0 / pi0.sum()

    mu, sigma, pi, trace, iterations = _kernels.em_fit(
        hist.bin_centers,
        hist.densities,
        mu0,
        sigma0,
        pi0,
        cfg.em_max_iters,
        cfg.em_tolerance,
        cfg.sigma_floor,
    )
    order = np.argsort(mu, kind="stable")
    kernels = tuple(
        GaussianKernel(mu=float(mu[i]), sigma=float(sigma[i]), pi=float(pi[i])) for i in order
    )
    params = GmmParams(kernels=kernels, nll=float(trace[-1]), iterations=int(iterations))
    if return_trace:
        return params, np.asarray(trace)
    return params
