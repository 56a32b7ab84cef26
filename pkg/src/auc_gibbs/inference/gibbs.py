"""Gibbs posterior for the AUC under the squared-indicator loss.

With loss {theta - 1(u > v)}^2 the posterior is proportional to
exp{-omega m n (theta - theta_hat)^2} pi(theta) on [0, 1], a truncated normal for
both supported priors.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from auc_gibbs.errors import InputError, NumericalError
from auc_gibbs.inference.auc_core import mann_whitney, tau_estimates
from auc_gibbs.inference.stats_core import _log_mass, _standard_ppf, truncnorm_moments
from auc_gibbs.models import CredibleInterval, GibbsPosterior, Prior, ScoreData

_HPD_BISECTION_STEPS = 64


def posterior_location_scale(
    theta_hat: Any, m: int, n: int, prior: Prior, omega: float
) -> tuple[Any, float]:
    """Closed-form (mu_mn, sigma_mn); ``theta_hat`` may be an array of centres."""
    if not omega > 0.0:
        raise InputError(f"learning rate must be > 0, got {omega}")
    if prior.is_flat:
        return theta_hat, 1.0 / math.sqrt(2.0 * omega * m * n)
    s0 = prior.scale**2
    k = 2.0 * omega * s0 * m * n
    mu = (prior.location + k * np.asarray(theta_hat, dtype=float)) / (1.0 + k)
    if np.ndim(theta_hat) == 0:
        mu = float(mu)
    return mu, math.sqrt(s0 / (1.0 + k))


def posterior_from_summary(
    theta_hat: float, m: int, n: int, prior: Prior, omega: float
) -> GibbsPosterior:
    mu, sigma = posterior_location_scale(theta_hat, m, n, prior, omega)
    return GibbsPosterior(
        mu_mn=float(mu),
        sigma_mn=sigma,
        omega=float(omega),
        theta_hat=float(theta_hat),
        m=m,
        n=n,
        prior=prior,
    )


def build_posterior(data: ScoreData, prior: Prior, omega: float) -> GibbsPosterior:
    return posterior_from_summary(mann_whitney(data), data.m, data.n, prior, omega)


def posterior_moments(p: GibbsPosterior) -> tuple[float, float]:
    return truncnorm_moments(p.distribution)


def hpd_bounds(mu: Any, sigma: Any, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """HPD endpoints for N(mu, sigma^2) truncated to [0, 1], elementwise.

    The density is unimodal with mode clip(mu, 0, 1), so every level set is an
    interval: one-sided when the mode sits on a boundary, otherwise
    [mu - h, mu + h] clipped to [0, 1] with h found by bisection on the mass.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    mu_arr, sigma_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(mu, dtype=float)),
        np.atleast_1d(np.asarray(sigma, dtype=float)),
    )
    mu_arr = mu_arr.astype(float)
    sigma_arr = sigma_arr.astype(float)
    target = 1.0 - alpha
    a = -mu_arr / sigma_arr
    b = (1.0 - mu_arr) / sigma_arr
    log_z = _log_mass(a, b)

    lower = np.zeros_like(mu_arr)
    upper = np.ones_like(mu_arr)

    below = mu_arr <= 0.0
    if np.any(below):
        q = np.full(int(below.sum()), target)
        upper[below] = mu_arr[below] + sigma_arr[below] * _standard_ppf(a[below], b[below], q)
    above = mu_arr >= 1.0
    if np.any(above):
        q = np.full(int(above.sum()), alpha)
        lower[above] = mu_arr[above] + sigma_arr[above] * _standard_ppf(a[above], b[above], q)

    inside = ~below & ~above
    if np.any(inside):
        mu_in, sd_in = mu_arr[inside], sigma_arr[inside]
        a_in, b_in, log_z_in = a[inside], b[inside], log_z[inside]
        h_lo = np.zeros_like(mu_in)
        h_hi = np.maximum(mu_in, 1.0 - mu_in)
        for _step in range(_HPD_BISECTION_STEPS):
            h_mid = 0.5 * (h_lo + h_hi)
            z = h_mid / sd_in
            with np.errstate(divide="ignore", invalid="ignore"):
                mass = np.exp(
                    _log_mass(np.maximum(a_in, -z), np.minimum(b_in, z)) - log_z_in
                )
            short = mass < target
            h_lo = np.where(short, h_mid, h_lo)
            h_hi = np.where(short, h_hi, h_mid)
        lower[inside] = np.maximum(0.0, mu_in - h_hi)
        upper[inside] = np.minimum(1.0, mu_in + h_hi)

    return np.clip(lower, 0.0, 1.0), np.clip(upper, 0.0, 1.0)


def hpd_interval(p: GibbsPosterior, alpha: float) -> CredibleInterval:
    lower, upper = hpd_bounds(p.mu_mn, p.sigma_mn, alpha)
    return CredibleInterval(
        lower=float(lower[0]), upper=float(upper[0]), level=1.0 - alpha, kind="HPD"
    )


def analytic_learning_rate(data: ScoreData) -> float:
    m, n = data.m, data.n
    tau10, tau01 = tau_estimates(data)
    lam = m / (m + n)
    spread = tau10 / lam + tau01 / (1.0 - lam)
    if not spread > 0.0:
        raise NumericalError(
            f"variance estimate nonpositive (tau10={tau10:.6g}, tau01={tau01:.6g}); "
            "use the bootstrap calibration instead"
        )
    return (m + n) / (2.0 * m * n * spread)


def posterior_tail_mass(p: GibbsPosterior, center: float, radius: float) -> float:
    """Posterior mass of {theta: |theta - center| > radius}."""
    if radius < 0.0:
        raise InputError(f"radius must be >= 0, got {radius}")
    dist = p.distribution
    lo = max(0.0, center - radius)
    hi = min(1.0, center + radius)
    if hi <= lo:
        return 1.0
    return max(0.0, 1.0 - (dist.cdf(hi) - dist.cdf(lo)))


def chebyshev_tail_bound(p: GibbsPosterior, center: float, radius: float) -> float:
    if not radius > 0.0:
        raise InputError(f"radius must be > 0, got {radius}")
    mean, variance = posterior_moments(p)
    return (variance + (mean - center) ** 2) / radius**2
