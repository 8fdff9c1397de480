import math

import numpy as np
import pytest

from ssraug import (
    GaussianKernel,
    GmmParams,
    SsrConfig,
    compute_histogram,
    fit_gmm,
    gaussian_pdf,
    mixture_density,
    negative_log_likelihood,
    posterior,
)
from ssraug.errors import DegenerateHistogram, InvalidConfig
from ssraug.gmm import default_init
from ssraug.imaging import Histogram

CFG = SsrConfig()

# frozen from an independent high-precision evaluation (mpmath, 30 digits)
PDF_PEAK_SIGMA_0P1 = 3.98942280401432678


def make_params(mus, sigmas, pis, nll=0.0, iters=0):
    return GmmParams(
        kernels=tuple(GaussianKernel(m, s, p) for m, s, p in zip(mus, sigmas, pis)),
        nll=nll,
        iterations=iters,
    )


def mixture_histogram(rng, mus, sigmas, pis, n=200_000, bins=256):
    ks = rng.choice(len(mus), size=n, p=pis)
    x = rng.normal(np.asarray(mus)[ks], np.asarray(sigmas)[ks])
    return compute_histogram(np.clip(x, 0, 1).reshape(n // 100, 100), bins)


def test_gaussian_pdf_unit_peak():
    k = GaussianKernel(mu=0.3, sigma=1.0 / math.sqrt(2 * math.pi), pi=1.0)
    assert gaussian_pdf(0.3, k) == pytest.approx(1.0, abs=1e-14)


def test_gaussian_pdf_derived_peak():
    k = GaussianKernel(mu=0.5, sigma=0.1, pi=1.0)
    assert gaussian_pdf(0.5, k) == pytest.approx(PDF_PEAK_SIGMA_0P1, abs=1e-12)


def test_gaussian_pdf_symmetry():
    k = GaussianKernel(mu=0.4, sigma=0.07, pi=1.0)
    for x in (0.01, 0.1, 0.25):
        assert gaussian_pdf(0.4 + x, k) == pytest.approx(gaussian_pdf(0.4 - x, k), rel=1e-14)


def test_posterior_symmetric_pair():
    params = make_params([0.3, 0.3, 0.8], [0.05, 0.05, 0.05], [0.5, 0.5, 0.0])
    g = posterior(0.3, params)
    assert g == pytest.approx([0.5, 0.5, 0.0], abs=1e-12)


def test_posterior_dominant_kernel():
    # third kernel 12 sigma away, second collocated with third
    params = make_params([0.2, 0.8, 0.8], [0.05, 0.05, 0.05], [1 / 3, 1 / 3, 1 / 3])
    g = posterior(0.2, params)
    assert g[0] >= 0.999


def test_posterior_rows_sum_to_one():
    params = make_params([0.1, 0.4, 0.9], [0.02, 0.06, 0.1], [0.3, 0.5, 0.2])
    g = posterior(np.linspace(0, 1, 257), params)
    assert np.allclose(g.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(g >= 0)


def test_posterior_deep_underflow_region():
    # tiny sigmas, point far away: every weighted density underflows in
    # linear space; log-space evaluation still yields the exact answer
    params = make_params([0.1, 0.2, 0.3], [1e-4, 1e-4, 1e-4], [1 / 3, 1 / 3, 1 / 3])
    g = posterior(0.9, params)
    assert g.sum() == pytest.approx(1.0, abs=1e-12)
    assert g == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)


def test_mixture_density_reduction():
    params = make_params([0.3, 0.6, 0.9], [0.05, 0.05, 0.05], [1.0, 0.0, 0.0])
    b = np.linspace(0, 1, 11)
    expect = [gaussian_pdf(x, params.kernels[0]) for x in b]
    assert np.allclose(mixture_density(b, params), expect, rtol=1e-14)


def test_mixture_density_integrates_to_one():
    params = make_params([0.2, 0.5, 0.8], [0.05, 0.1, 0.07], [0.3, 0.4, 0.3])
    # quadrature oracle at 1e-4 step over [-1, 2]
    x = np.arange(-1.0, 2.0 + 1e-4, 1e-4)
    integral = np.trapezoid(mixture_density(x, params), x)
    assert integral == pytest.approx(1.0, abs=1e-3)
    assert np.all(mixture_density(x, params) >= 0)


def test_nll_single_supported_bin_log_one():
    # density exactly 1 at the supported bin center
    s = 1.0 / math.sqrt(2 * math.pi)
    params = make_params([0.75, 0.1, 0.2], [s, s, s], [1.0, 0.0, 0.0])
    hist = Histogram(bin_centers=np.array([0.25, 0.75]), densities=np.array([0.0, 1.0]))
    assert negative_log_likelihood(hist, params) == pytest.approx(0.0, abs=1e-12)


def test_nll_matches_direct_evaluation():
    params = make_params([0.2, 0.5, 0.8], [0.1, 0.1, 0.1], [0.5, 0.3, 0.2])
    hist = Histogram(bin_centers=np.array([0.25, 0.75]), densities=np.array([0.4, 0.6]))
    # independent direct evaluation with math-module scalars
    expected = 0.0
    for w, b in zip(hist.densities, hist.bin_centers):
        dens = sum(
            k.pi * math.exp(-((b - k.mu) ** 2) / (2 * k.sigma**2)) / (k.sigma * math.sqrt(2 * math.pi))
            for k in params.kernels
        )
        expected -= w * math.log(dens)
    assert negative_log_likelihood(hist, params) == pytest.approx(expected, rel=1e-12)


def test_nll_infinite_on_unsupported_density():
    params = make_params([0.2, 0.2, 0.2], [1e-4, 1e-4, 1e-4], [1 / 3, 1 / 3, 1 / 3])
    hist = Histogram(bin_centers=np.array([0.2, 0.9]), densities=np.array([0.5, 0.5]))
    assert negative_log_likelihood(hist, params) == math.inf


def test_fit_single_gaussian_recovery():
    rng = np.random.default_rng(7)
    hist = mixture_histogram(rng, [0.5], [0.05], [1.0])
    params = fit_gmm(hist, CFG)
    dominant = max(params.kernels, key=lambda k: k.pi)
    # sample-moment oracle on the generated data
    assert abs(dominant.mu - 0.5) <= 0.01
    assert abs(dominant.sigma - 0.05) <= 0.01


def test_fit_three_mixture_recovery():
    rng = np.random.default_rng(11)
    hist = mixture_histogram(rng, [0.15, 0.35, 0.75], [0.05, 0.05, 0.05], [0.45, 0.35, 0.20])
    params = fit_gmm(hist, CFG)
    for k, truth in zip(params.kernels, [0.15, 0.35, 0.75]):
        assert abs(k.mu - truth) <= 0.02


def test_fit_invariants():
    rng = np.random.default_rng(3)
    hist = mixture_histogram(rng, [0.2, 0.5, 0.8], [0.05, 0.08, 0.05], [0.4, 0.4, 0.2])
    params = fit_gmm(hist, CFG)
    assert abs(sum(k.pi for k in params.kernels) - 1.0) < 1e-9
    assert all(k.sigma >= CFG.sigma_floor for k in params.kernels)
    mus = [k.mu for k in params.kernels]
    assert mus == sorted(mus)


def test_fit_nll_monotone_random_inits():
    rng = np.random.default_rng(21)
    hist = mixture_histogram(rng, [0.2, 0.6, 0.85], [0.04, 0.07, 0.05], [0.5, 0.3, 0.2])
    for _ in range(20):
        init = [
            GaussianKernel(mu=float(rng.uniform(0, 1)), sigma=float(rng.uniform(0.01, 0.3)), pi=1 / 3)
            for _ in range(3)
        ]
        _, trace = fit_gmm(hist, CFG, init=init, return_trace=True)
        assert np.all(np.diff(trace) <= 1e-9)


def test_fit_improves_on_init():
    rng = np.random.default_rng(5)
    hist = mixture_histogram(rng, [0.2, 0.5, 0.8], [0.05, 0.05, 0.05], [0.3, 0.4, 0.3])
    init = default_init(hist)
    init_params = GmmParams(kernels=tuple(init), nll=0.0, iterations=0)
    fitted = fit_gmm(hist, CFG)
    assert fitted.nll <= negative_log_likelihood(hist, init_params) + 1e-9


def test_fit_deterministic():
    rng = np.random.default_rng(9)
    hist = mixture_histogram(rng, [0.25, 0.5, 0.8], [0.05, 0.05, 0.05], [0.4, 0.3, 0.3])
    a = fit_gmm(hist, CFG)
    b = fit_gmm(hist, CFG)
    assert a == b


def test_fit_degenerate_histogram():
    hist = compute_histogram(np.full((4, 4), 0.5), 256)
    with pytest.raises(DegenerateHistogram):
        fit_gmm(hist, CFG)


def test_params_json_roundtrip(tmp_path):
    rng = np.random.default_rng(13)
    hist = mixture_histogram(rng, [0.2, 0.5, 0.8], [0.05, 0.05, 0.05], [0.3, 0.4, 0.3])
    params = fit_gmm(hist, CFG)
    path = tmp_path / "params.json"
    path.write_text(params.to_json())
    assert GmmParams.from_json_file(path) == params


def test_fit_restarts_never_worse():
    rng = np.random.default_rng(14)
    hist = mixture_histogram(rng, [0.15, 0.4, 0.85], [0.03, 0.04, 0.03], [0.5, 0.3, 0.2])
    base = fit_gmm(hist, CFG)
    for restarts in (1, 3):
        assert fit_gmm(hist, CFG, restarts=restarts).nll <= base.nll + 1e-12


def test_fit_restarts_deterministic():
    rng = np.random.default_rng(15)
    hist = mixture_histogram(rng, [0.2, 0.5, 0.8], [0.05, 0.05, 0.05], [0.3, 0.4, 0.3])
    assert fit_gmm(hist, CFG, restarts=3) == fit_gmm(hist, CFG, restarts=3)


def test_fit_restarts_negative_rejected():
    rng = np.random.default_rng(16)
    hist = mixture_histogram(rng, [0.2, 0.5, 0.8], [0.05, 0.05, 0.05], [0.3, 0.4, 0.3])
    with pytest.raises(InvalidConfig):
        fit_gmm(hist, CFG, restarts=-1)
