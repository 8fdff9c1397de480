"""Hot numeric kernels: weighted EM inner loop and per-pixel posteriors.

Two interchangeable backends exist. The numba backend JIT-compiles
explicit loops; the numpy backend is fully vectorized. Selection happens
once at import time: numba is used when importable unless the
environment variable ``SSRAUG_NO_NUMBA`` is set to a non-empty value.

Both backends implement identical math (log-space mixture evaluation,
density-weighted M-step, sigma floor as a constrained maximization), so
either satisfies the EM monotonicity contract.
"""

from __future__ import annotations

import os

import numpy as np

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_NEG_INF = -np.inf


# ---------------------------------------------------------------------------
# pure-numpy backend


def _e_step_py(centers, weights, mu, sigma, pi):
    """Return (nll, gamma) for current parameters.

    gamma has shape (K, M). Bins where every weighted component density
    underflows get a uniform 1/K responsibility; if such a bin carries
    histogram mass the NLL is +inf (non-converged sentinel).
    """
    k = mu.size
    z = (centers[None, :] - mu[:, None]) / sigma[:, None]
    logpdf = -0.5 * z * z - np.log(sigma)[:, None] - _LOG_SQRT_2PI
    logw = np.where(pi > 0, np.log(np.maximum(pi, 1e-300)), _NEG_INF)
    a = logw[:, None] + logpdf
    mx = np.max(a, axis=0)
    ok = np.isfinite(mx)
    safe_mx = np.where(ok, mx, 0.0)
    e = np.exp(a - safe_mx[None, :])
    s = e.sum(axis=0)
    lse = np.where(ok, safe_mx + np.log(np.where(ok, s, 1.0)), _NEG_INF)
    with np.errstate(invalid="ignore"):
        gamma = np.where(ok[None, :], e / np.where(s > 0, s, 1.0), 1.0 / k)
    support = weights > 0
    if np.any(~np.isfinite(lse[support])):
        nll = np.inf
    else:
        nll = -float(np.dot(weights[support], lse[support]))
    return nll, gamma


def _m_step_py(centers, weights, gamma, mu, sigma, sigma_floor):
    wg = gamma * weights[None, :]
    nk = wg.sum(axis=1)
    total = nk.sum()
    new_mu = mu.copy()
    new_sigma = sigma.copy()
    live = nk > 0
    new_mu[live] = (wg[live] @ centers) / nk[live]
    diff = centers[None, :] - new_mu[:, None]
    var = np.empty_like(nk)
    var[live] = (wg[live] * diff[live] ** 2).sum(axis=1) / nk[live]
    new_sigma[live] = np.maximum(np.sqrt(var[live]), sigma_floor)
    new_pi = nk / total
    return new_mu, new_sigma, new_pi


def _em_fit_py(centers, weights, mu, sigma, pi, max_iters, tol, sigma_floor):
    mu = mu.copy()
    sigma = np.maximum(sigma.copy(), sigma_floor)
    pi = pi.copy()
    trace = np.empty(max_iters + 1, dtype=np.float64)
    nll_prev = np.nan
    iterations = 0
    for it in range(max_iters + 1):
        nll, gamma = _e_step_py(centers, weights, mu, sigma, pi)
        trace[it] = nll
        iterations = it
        if it > 0 and np.isfinite(nll) and np.isfinite(nll_prev):
            rel = abs(nll_prev - nll) / max(abs(nll_prev), 1.0)
            if rel < tol:
                break
        if it == max_iters:
            break
        mu, sigma, pi = _m_step_py(centers, weights, gamma, mu, sigma, sigma_floor)
        nll_prev = nll
    return mu, sigma, pi, trace[: iterations + 1], iterations


def _pixel_posteriors_py(values, mu, sigma, pi):
    _, gamma = _e_step_py(values, np.zeros_like(values), mu, sigma, pi)
    return gamma.T.copy()


# ---------------------------------------------------------------------------
# numba backend


def _build_numba():
    from numba import njit

    log_sqrt_2pi = float(_LOG_SQRT_2PI)

    @njit(cache=True)
    def e_step(centers, weights, mu, sigma, pi, gamma):
        k = mu.size
        m = centers.size
        nll = 0.0
        bad = False
        for j in range(m):
            mx = _NEG_INF
            for i in range(k):
                if pi[i] > 0.0:
                    z = (centers[j] - mu[i]) / sigma[i]
                    a = np.log(pi[i]) - 0.5 * z * z - np.log(sigma[i]) - log_sqrt_2pi
                else:
                    a = _NEG_INF
                gamma[i, j] = a
                if a > mx:
                    mx = a
            if mx == _NEG_INF:
                for i in range(k):
                    gamma[i, j] = 1.0 / k
                if weights[j] > 0.0:
                    bad = True
            else:
                s = 0.0
                for i in range(k):
                    gamma[i, j] = np.exp(gamma[i, j] - mx)
                    s += gamma[i, j]
                for i in range(k):
                    gamma[i, j] /= s
                if weights[j] > 0.0:
                    nll -= weights[j] * (mx + np.log(s))
        if bad:
            nll = np.inf
        return nll

    @njit(cache=True)
    def m_step(centers, weights, gamma, mu, sigma, pi, sigma_floor):
        k = mu.size
        m = centers.size
        total = 0.0
        for i in range(k):
            nk = 0.0
            sx = 0.0
            for j in range(m):
                wg = gamma[i, j] * weights[j]
                nk += wg
                sx += wg * centers[j]
            if nk > 0.0:
                new_mu = sx / nk
                sv = 0.0
                for j in range(m):
                    d = centers[j] - new_mu
                    sv += gamma[i, j] * weights[j] * d * d
                mu[i] = new_mu
                sigma[i] = max(np.sqrt(sv / nk), sigma_floor)
            pi[i] = nk
            total += nk
        for i in range(k):
            pi[i] /= total

    @njit(cache=True)
    def em_fit(centers, weights, mu0, sigma0, pi0, max_iters, tol, sigma_floor):
        mu = mu0.copy()
        sigma = np.maximum(sigma0, sigma_floor)
        pi = pi0.copy()
        gamma = np.empty((mu.size, centers.size), dtype=np.float64)
        trace = np.empty(max_iters + 1, dtype=np.float64)
        nll_prev = np.nan
        iterations = 0
        for it in range(max_iters + 1):
            nll = e_step(centers, weights, mu, sigma, pi, gamma)
            trace[it] = nll
            iterations = it
            if it > 0 and np.isfinite(nll) and np.isfinite(nll_prev):
                rel = abs(nll_prev - nll) / max(abs(nll_prev), 1.0)
                if rel < tol:
                    break
            if it == max_iters:
                break
            m_step(centers, weights, gamma, mu, sigma, pi, sigma_floor)
            nll_prev = nll
        return mu, sigma, pi, trace[: iterations + 1].copy(), iterations

    @njit(cache=True)
    def pixel_posteriors(values, mu, sigma, pi):
        gamma = np.empty((mu.size, values.size), dtype=np.float64)
        e_step(values, np.zeros_like(values), mu, sigma, pi, gamma)
        return gamma.T.copy()

    return em_fit, pixel_posteriors


def _select_backend():
    if os.environ.get("SSRAUG_NO_NUMBA"):
        return "numpy", _em_fit_py, _pixel_posteriors_py
    try:
        em_fit, pixel_posteriors = _build_numba()
    except ImportError:
        return "numpy", _em_fit_py, _pixel_posteriors_py
    return "numba", em_fit, pixel_posteriors


BACKEND, em_fit, pixel_posteriors = _select_backend()
