"""Learning-rate selection: bootstrap coverage matching by stochastic approximation,
and the Monte Carlo oracle rate for simulation scenarios with a known AUC."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from auc_gibbs.config import OMEGA_FLOOR, ORACLE_COVERAGE_TOLERANCE
from auc_gibbs.errors import InputError, NumericalError
from auc_gibbs.inference.auc_core import mann_whitney
from auc_gibbs.inference.gibbs import (
    analytic_learning_rate,
    hpd_bounds,
    posterior_location_scale,
)
from auc_gibbs.inference.stats_core import RngStream
from auc_gibbs.models import (
    CalibrationConfig,
    CalibrationIterate,
    CalibrationTrace,
    Prior,
    ScenarioId,
    ScoreData,
)

ORACLE_LOG_OMEGA_BOUNDS = (math.log(1e-8), math.log(1e8))
ORACLE_MAX_BISECTIONS = 200


def check_step_exponent(exponent: float) -> None:
    # sum kappa_t diverges and sum kappa_t^2 converges exactly on this range
    if not 0.5 < exponent <= 1.0:
        raise InputError(f"step exponent must lie in (0.5, 1], got {exponent}")


def step_size(t: int, exponent: float) -> float:
    return (t + 1.0) ** (-exponent)


def bootstrap_resample(data: ScoreData, rng: RngStream) -> ScoreData:
    u_index = rng.generator.integers(0, data.m, size=data.m)
    v_index = rng.generator.integers(0, data.n, size=data.n)
    return ScoreData(u=data.u[u_index], v=data.v[v_index])


def bootstrap_centers(data: ScoreData, B: int, rng: RngStream) -> np.ndarray:
    """theta_hat of B bootstrap resamples, each drawn from its own substream."""
    return np.array(
        [mann_whitney(bootstrap_resample(data, rng.substream(b))) for b in range(B)]
    )


def _coverage_from_centers(
    centers: np.ndarray,
    target: float,
    m: int,
    n: int,
    omega: float,
    alpha: float,
    prior: Prior,
) -> float:
    mu, sigma = posterior_location_scale(centers, m, n, prior, omega)
    lower, upper = hpd_bounds(mu, sigma, alpha)
    covered = (lower <= target) & (target <= upper)
    return int(covered.sum()) / centers.size


def coverage_estimate(
    boot_samples: Sequence[ScoreData],
    theta_hat: float,
    omega: float,
    alpha: float,
    prior: Prior,
) -> float:
    if not boot_samples:
        raise InputError("coverage estimate needs at least one bootstrap sample")
    centers = np.array([mann_whitney(sample) for sample in boot_samples])
    first = boot_samples[0]
    return _coverage_from_centers(
        centers, theta_hat, first.m, first.n, omega, alpha, prior
    )


def resolve_initial_omega(data: ScoreData, cfg: CalibrationConfig) -> float:
    if cfg.omega_init != "auto":
        return float(cfg.omega_init)
    try:
        return analytic_learning_rate(data)
    except NumericalError:
        return 1.0


def calibrate(
    data: ScoreData,
    prior: Prior,
    cfg: CalibrationConfig,
    rng: RngStream | None = None,
) -> CalibrationTrace:
    """Match bootstrap HPD coverage of theta_hat to 1 - alpha.

    The B resamples are drawn once from ``rng`` (default ``RngStream(cfg.seed)``)
    and reused at every iterate, so coverage is a deterministic step function of
    omega and the iteration is reproducible.
    """
    check_step_exponent(cfg.kappa_exponent)
    if rng is None:
        rng = RngStream(cfg.seed)
    theta_hat = mann_whitney(data)
    centers = bootstrap_centers(data, cfg.B, rng.substream(0))
    target = 1.0 - cfg.alpha

    omega = resolve_initial_omega(data, cfg)
    iterates: list[CalibrationIterate] = []
    for t in range(1, cfg.max_iterations + 1):
        coverage = _coverage_from_centers(
            centers, theta_hat, data.m, data.n, omega, cfg.alpha, prior
        )
        delta = coverage - target
        iterates.append(CalibrationIterate(t=t, omega=omega, coverage=coverage, delta=delta))
        omega = max(omega + step_size(t, cfg.kappa_exponent) * delta, OMEGA_FLOOR)
        if abs(delta) < cfg.epsilon:
            return CalibrationTrace(omega_hat=omega, iterates=iterates, converged=True)
    return CalibrationTrace(omega_hat=omega, iterates=iterates, converged=False)


def oracle_learning_rate(
    generator: ScenarioId,
    m: int,
    n: int,
    alpha: float,
    mc_reps: int,
    rng: RngStream,
    tolerance: float = ORACLE_COVERAGE_TOLERANCE,
) -> float:
    """omega at which flat-prior HPD intervals from fresh datasets cover the true AUC
    with frequency 1 - alpha, by bisection in log omega."""
    from auc_gibbs.sources.scenarios import sample_theta_hats, true_auc

    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    if mc_reps * tolerance < 1.0:
        raise InputError(
            f"mc_reps={mc_reps} cannot resolve a coverage tolerance of {tolerance}"
        )
    theta_star = true_auc(generator)
    centers = sample_theta_hats(generator, m, n, mc_reps, rng)
    target = 1.0 - alpha
    flat = Prior.flat()

    def coverage(log_omega: float) -> float:
        return _coverage_from_centers(
            centers, theta_star, m, n, math.exp(log_omega), alpha, flat
        )

    lo, hi = ORACLE_LOG_OMEGA_BOUNDS
    if coverage(lo) < target or coverage(hi) > target:
        raise NumericalError(
            f"oracle coverage does not cross {target} on omega in [{math.exp(lo)}, {math.exp(hi)}]"
        )
    mid = 0.5 * (lo + hi)
    for _step in range(ORACLE_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        value = coverage(mid)
        if abs(value - target) <= tolerance or hi - lo < 1e-10:
            break
        if value > target:
            lo = mid
        else:
            hi = mid
    return math.exp(mid)
