"""Simulation scenarios: V ~ N(0, 1) throughout, U drawn from one of four laws."""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from auc_gibbs.errors import InputError
from auc_gibbs.inference.stats_core import RngStream, norm_cdf
from auc_gibbs.models import ScenarioId, ScoreData

SKEW_LOCATION = 3.0
SKEW_SCALE = 1.0
SKEW_SHAPE = -4.0

MIXTURE_WEIGHT = 0.2
MIXTURE_LOW = (-1.0, 1.0)
MIXTURE_HIGH = (2.0, 0.5)

EXP_SHIFT = 2.0

# upper bound on booleans materialised per chunk by sample_theta_hats
_CHUNK_CELLS = 2_000_000


def _skew_delta(shape: float) -> float:
    return shape / math.sqrt(1.0 + shape * shape)


def _draw_u(scenario: ScenarioId, size: tuple[int, ...], generator: np.random.Generator) -> np.ndarray:
    if scenario == ScenarioId.EX1:
        return 2.0 + generator.standard_normal(size)
    if scenario == ScenarioId.EX2:
        delta = _skew_delta(SKEW_SHAPE)
        z0 = generator.standard_normal(size)
        z1 = generator.standard_normal(size)
        return SKEW_LOCATION + SKEW_SCALE * (
            delta * np.abs(z0) + math.sqrt(1.0 - delta * delta) * z1
        )
    if scenario == ScenarioId.EX3:
        low = generator.random(size) < MIXTURE_WEIGHT
        z = generator.standard_normal(size)
        return np.where(
            low,
            MIXTURE_LOW[0] + MIXTURE_LOW[1] * z,
            MIXTURE_HIGH[0] + MIXTURE_HIGH[1] * z,
        )
    if scenario == ScenarioId.EX4:
        return EXP_SHIFT - generator.exponential(1.0, size)
    raise InputError(f"unknown scenario: {scenario!r}")


def parse_scenario(raw: str | int) -> ScenarioId:
    text = str(raw).strip().lower().removeprefix("ex")
    try:
        return ScenarioId(int(text))
    except ValueError as exc:
        raise InputError(f"scenario must be one of 1..4, got {raw!r}") from exc


def generate(scenario: ScenarioId, m: int, n: int, rng: RngStream) -> ScoreData:
    if m < 2 or n < 2:
        raise InputError(f"scenarios need m >= 2 and n >= 2, got m={m}, n={n}")
    u = _draw_u(scenario, (m,), rng.generator)
    v = rng.generator.standard_normal(n)
    return ScoreData(u=u, v=v)


def true_auc(scenario: ScenarioId) -> float:
    """P(U > V) in closed form for every scenario."""
    if scenario == ScenarioId.EX1:
        return float(norm_cdf(2.0 / math.sqrt(2.0)))
    if scenario == ScenarioId.EX2:
        # U - V is again skew normal: rescale by sqrt(omega^2 + 1) and shrink delta
        spread = math.sqrt(SKEW_SCALE**2 + 1.0)
        delta = _skew_delta(SKEW_SHAPE) * SKEW_SCALE / spread
        shape = delta / math.sqrt(1.0 - delta * delta)
        z = -SKEW_LOCATION / spread
        cdf = float(norm_cdf(z)) - 2.0 * float(special.owens_t(z, shape))
        return 1.0 - cdf
    if scenario == ScenarioId.EX3:
        low = float(norm_cdf(MIXTURE_LOW[0] / math.sqrt(MIXTURE_LOW[1] ** 2 + 1.0)))
        high = float(norm_cdf(MIXTURE_HIGH[0] / math.sqrt(MIXTURE_HIGH[1] ** 2 + 1.0)))
        return MIXTURE_WEIGHT * low + (1.0 - MIXTURE_WEIGHT) * high
    if scenario == ScenarioId.EX4:
        return float(norm_cdf(EXP_SHIFT)) - math.exp(0.5 - EXP_SHIFT) * float(
            norm_cdf(EXP_SHIFT - 1.0)
        )
    raise InputError(f"unknown scenario: {scenario!r}")


def monte_carlo_auc(scenario: ScenarioId, draws: int, rng: RngStream) -> float:
    u = _draw_u(scenario, (draws,), rng.generator)
    v = np.sort(rng.generator.standard_normal(draws))
    return float(np.searchsorted(v, u, side="left").sum()) / (draws * draws)


def sample_theta_hats(
    scenario: ScenarioId, m: int, n: int, reps: int, rng: RngStream
) -> np.ndarray:
    """Mann-Whitney estimates of ``reps`` fresh datasets, drawn in chunks."""
    if reps < 1:
        raise InputError(f"reps must be >= 1, got {reps}")
    chunk = max(1, _CHUNK_CELLS // (m * n))
    out = np.empty(reps)
    start = 0
    while start < reps:
        size = min(chunk, reps - start)
        u = _draw_u(scenario, (size, m), rng.generator)
        v = rng.generator.standard_normal((size, n))
        wins = (u[:, :, None] > v[:, None, :]).sum(axis=(1, 2))
        out[start : start + size] = wins / (m * n)
        start += size
    return out
