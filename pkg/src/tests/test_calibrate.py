from __future__ import annotations

import math

import numpy as np
import pytest

from auc_gibbs.config import OMEGA_FLOOR
from auc_gibbs.errors import InputError
from auc_gibbs.inference.auc_core import mann_whitney
from auc_gibbs.inference.calibrate import (
    bootstrap_resample,
    calibrate,
    check_step_exponent,
    coverage_estimate,
    oracle_learning_rate,
    resolve_initial_omega,
    step_size,
)
from auc_gibbs.inference.gibbs import analytic_learning_rate
from auc_gibbs.inference.stats_core import RngStream
from auc_gibbs.models import CalibrationConfig, Prior, ScenarioId, ScoreData
from auc_gibbs.sources.scenarios import generate


def _data(n: int = 40, seed: int = 5) -> ScoreData:
    return generate(ScenarioId.EX1, n, n, RngStream(seed, 1))


def test_step_size_schedule() -> None:
    assert step_size(1, 0.51) == pytest.approx(2.0**-0.51)
    assert step_size(9, 1.0) == pytest.approx(0.1)
    check_step_exponent(1.0)
    check_step_exponent(0.51)
    for bad in (0.5, 0.3, 1.2):
        with pytest.raises(InputError, match="step exponent"):
            check_step_exponent(bad)


def test_bootstrap_resample_draws_within_each_group() -> None:
    data = ScoreData(u=[10.0, 11.0, 12.0], v=[0.0, 1.0])
    sample = bootstrap_resample(data, RngStream(3))

    assert (sample.m, sample.n) == (3, 2)
    assert set(sample.u) <= {10.0, 11.0, 12.0}
    assert set(sample.v) <= {0.0, 1.0}


def test_coverage_is_nonincreasing_in_learning_rate() -> None:
    data = _data()
    rng = RngStream(8)
    boots = [bootstrap_resample(data, rng.substream(b)) for b in range(200)]
    theta_hat = mann_whitney(data)
    omegas = np.exp(np.linspace(-8.0, 4.0, 40))
    coverages = [
        coverage_estimate(boots, theta_hat, float(omega), 0.05, Prior.flat()) for omega in omegas
    ]

    assert coverages[0] == 1.0
    assert all(later <= earlier for earlier, later in zip(coverages, coverages[1:]))
    assert coverages[-1] < 0.95


def test_coverage_estimate_requires_samples() -> None:
    with pytest.raises(InputError, match="at least one bootstrap sample"):
        coverage_estimate([], 0.5, 1.0, 0.05, Prior.flat())


def test_calibrate_converges_and_reproduces() -> None:
    data = _data()
    cfg = CalibrationConfig(B=200, seed=31)
    trace = calibrate(data, Prior.flat(), cfg)
    again = calibrate(data, Prior.flat(), cfg)

    assert trace == again
    assert trace.converged
    assert abs(trace.iterates[-1].delta) < cfg.epsilon
    assert [it.t for it in trace.iterates] == list(range(1, len(trace.iterates) + 1))
    assert trace.iterates[0].omega == pytest.approx(analytic_learning_rate(data))
    assert all(it.omega >= OMEGA_FLOOR for it in trace.iterates)
    assert trace.omega_hat > 0.0


def test_calibrate_with_informative_prior_uses_same_prior() -> None:
    data = _data(30, seed=6)
    cfg = CalibrationConfig(B=100, seed=2, omega_init=0.5)
    prior = Prior.truncated_normal(0.75, 0.81)
    trace = calibrate(data, prior, cfg)

    assert trace.iterates[0].omega == 0.5
    assert trace.iterates[0].coverage == pytest.approx(
        trace.iterates[0].delta + 0.95, abs=1e-12
    )


def test_zero_iterations_returns_initial_rate_unconverged() -> None:
    data = _data()
    cfg = CalibrationConfig(B=10, omega_init=0.25, max_iterations=0)
    trace = calibrate(data, Prior.flat(), cfg)

    assert trace.omega_hat == 0.25
    assert trace.iterates == []
    assert not trace.converged


def test_auto_initial_rate_falls_back_on_separated_data() -> None:
    separated = ScoreData(u=[5.0, 6.0, 7.0], v=[0.0, 1.0, 2.0])
    assert resolve_initial_omega(separated, CalibrationConfig()) == 1.0
    assert resolve_initial_omega(separated, CalibrationConfig(omega_init=3.0)) == 3.0


def test_calibration_config_validation() -> None:
    with pytest.raises(InputError, match="kappa exponent"):
        CalibrationConfig(kappa_exponent=0.5)
    with pytest.raises(InputError, match="omega_init"):
        CalibrationConfig(omega_init="fast")
    with pytest.raises(InputError, match="bootstrap"):
        CalibrationConfig(B=0)


def test_oracle_rate_grows_as_target_coverage_drops() -> None:
    loose = oracle_learning_rate(ScenarioId.EX1, 25, 25, 0.5, 1000, RngStream(4, 0, 1, 25))
    tight = oracle_learning_rate(ScenarioId.EX1, 25, 25, 0.05, 1000, RngStream(4, 0, 1, 25))

    assert loose > tight > 0.0


def test_oracle_rejects_unresolvable_tolerance() -> None:
    with pytest.raises(InputError, match="cannot resolve"):
        oracle_learning_rate(ScenarioId.EX1, 25, 25, 0.05, 100, RngStream(1))


@pytest.mark.slow
def test_calibrated_rate_tracks_oracle_on_binormal_data() -> None:
    data = generate(ScenarioId.EX1, 50, 50, RngStream(2021, 1))
    trace = calibrate(data, Prior.flat(), CalibrationConfig(B=1000, seed=9))
    oracle = oracle_learning_rate(ScenarioId.EX1, 50, 50, 0.05, 5000, RngStream(2021, 0, 1, 50))

    assert oracle / 2.0 <= trace.omega_hat <= oracle * 2.0


def test_bootstrap_picks_each_score_uniformly() -> None:
    data = ScoreData(u=[10.0, 11.0, 12.0], v=[0.0, 1.0])
    rng = RngStream(44)
    draws = np.concatenate([bootstrap_resample(data, rng.substream(b)).u for b in range(30_000)])

    for value in (10.0, 11.0, 12.0):
        assert np.mean(draws == value) == pytest.approx(1.0 / 3.0, abs=0.01)


@pytest.mark.parametrize("exponent", [0.51, 0.75, 1.0])
def test_step_sizes_sum_diverges_while_squares_settle(exponent: float) -> None:
    t = np.arange(1, 2**20, dtype=float)
    steps = step_size(t, exponent)
    blocks = [(2**k, 2 ** (k + 1)) for k in range(6, 19)]
    block_sums = [steps[lo - 1 : hi - 1].sum() for lo, hi in blocks]
    square_sums = [(steps[lo - 1 : hi - 1] ** 2).sum() for lo, hi in blocks]

    # each doubling block adds at least log 2 / 2 to the sum, so it never converges
    assert min(block_sums) > 0.5 * math.log(2.0)
    assert all(later < earlier for earlier, later in zip(square_sums, square_sums[1:]))
    assert (steps**2).sum() < 1.0 / (2.0 * exponent - 1.0)
    if exponent < 1.0:
        floor = ((2.0**20) ** (1.0 - exponent) - 2.0 ** (1.0 - exponent)) / (1.0 - exponent)
    else:
        floor = math.log(2.0**19)
    assert steps.sum() > floor
