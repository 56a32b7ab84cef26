from __future__ import annotations

from typing import Any

import numpy as np

from auc_gibbs.errors import InputError
from auc_gibbs.models import AucEstimate, ScoreData


def _exceed_counts(data: ScoreData) -> np.ndarray:
    """#{j: V_j < U_i} for every i, by sorting V once."""
    sorted_v = np.sort(data.v)
    return np.searchsorted(sorted_v, data.u, side="left")


def _indicator_matrix(data: ScoreData) -> np.ndarray:
    return (data.u[:, None] > data.v[None, :]).astype(np.int64)


def pair_loss(theta: Any, u: Any, v: Any) -> Any:
    indicator = (np.asarray(u, dtype=float) > np.asarray(v, dtype=float)).astype(float)
    loss = (np.asarray(theta, dtype=float) - indicator) ** 2
    return float(loss) if np.ndim(loss) == 0 else loss


def population_risk(theta: float, theta_star: float) -> float:
    return theta**2 - 2.0 * theta_star * theta + theta_star**2


def mann_whitney(data: ScoreData) -> float:
    count = int(_exceed_counts(data).sum())
    return count / (data.m * data.n)


def empirical_risk(theta: float, data: ScoreData) -> float:
    if not 0.0 <= theta <= 1.0:
        raise InputError(f"theta must lie in [0, 1], got {theta}")
    theta_hat = mann_whitney(data)
    return (theta - theta_hat) ** 2 + theta_hat * (1.0 - theta_hat)


def tau_estimates(data: ScoreData) -> tuple[float, float]:
    m, n = data.m, data.n
    if m < 2 or n < 2:
        raise InputError(f"tau estimates need m >= 2 and n >= 2, got m={m}, n={n}")
    indicators = _indicator_matrix(data)
    theta_hat = int(indicators.sum()) / (m * n)

    # unordered pairs sharing a U (tau10) or sharing a V (tau01)
    row_counts = indicators.sum(axis=1)
    col_counts = indicators.sum(axis=0)
    pairs_10 = int((row_counts * (row_counts - 1) // 2).sum())
    pairs_01 = int((col_counts * (col_counts - 1) // 2).sum())

    tau10 = 2 * pairs_10 / (m * n * (n - 1)) - theta_hat**2
    tau01 = 2 * pairs_01 / (n * m * (m - 1)) - theta_hat**2
    return tau10, tau01


def asymptotic_variance(tau10: float, tau01: float, m: int, n: int) -> float:
    if m < 1 or n < 1:
        raise InputError(f"group sizes must be >= 1, got m={m}, n={n}")
    lam = m / (m + n)
    return (tau10 / lam + tau01 / (1.0 - lam)) / (m + n)


def mann_whitney_variance_bound(theta: float, m: int, n: int) -> float:
    """theta(1 - theta)(m + n)/(mn), an upper bound on Var(theta_hat)."""
    return theta * (1.0 - theta) * (m + n) / (m * n)


def estimate_auc(data: ScoreData) -> AucEstimate:
    tau10, tau01 = tau_estimates(data)
    return AucEstimate(
        theta_hat=mann_whitney(data),
        tau10_hat=tau10,
        tau01_hat=tau01,
        m=data.m,
        n=data.n,
    )
