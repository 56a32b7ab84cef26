"""Bayes rank-likelihood sampler under the binormal model.

Latent scores W_i ~ N(a, b^2) and Z_j ~ N(0, 1) are constrained to reproduce the
observed ranks of the pooled sample, so the sampler only ever sees ranks. The prior
on (a, b^2) is Jeffreys, proportional to b^-2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special

from auc_gibbs.config import DEBUG_RANK_CHECKS
from auc_gibbs.errors import InputError, NumericalError
from auc_gibbs.inference.stats_core import (
    RngStream,
    norm_cdf,
    norm_quantile,
    ranks,
    truncnorm_sample_array,
)
from auc_gibbs.models import BrlConfig, BrlDraws, CredibleInterval, ScoreData

MIN_INITIAL_B2 = 1e-6
SCAN_ORDERS = ("systematic", "checkerboard")


@dataclass
class BrlChain:
    a: float
    b2: float
    w: np.ndarray
    z: np.ndarray
    rank_target: np.ndarray
    rng: RngStream

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=float).copy()
        self.z = np.asarray(self.z, dtype=float).copy()
        self.rank_target = np.asarray(self.rank_target, dtype=np.int64)
        if self.rank_target.size != self.w.size + self.z.size:
            raise InputError("rank_target must hold one rank per latent score")
        if not self.b2 > 0.0:
            raise InputError(f"b2 must be > 0, got {self.b2}")
        # pooled coordinate holding each rank, smallest first
        self.by_rank = np.argsort(self.rank_target, kind="stable")

    @property
    def m(self) -> int:
        return int(self.w.size)

    @property
    def n(self) -> int:
        return int(self.z.size)

    def pooled(self) -> np.ndarray:
        return np.concatenate([self.w, self.z])

    def ranks_hold(self) -> bool:
        try:
            return bool(np.array_equal(ranks(self.pooled()), self.rank_target))
        except InputError:
            return False


def binormal_auc(a: float, b2: float) -> float:
    if not b2 > 0.0:
        raise InputError(f"b2 must be > 0, got {b2}")
    return float(norm_cdf(a / math.sqrt(b2 + 1.0)))


def binormal_roc(a: float, b2: float, t: Any) -> Any:
    """True-positive rate at false-positive rate ``t``: Phi[(a + Phi^-1(t)) / b]."""
    if not b2 > 0.0:
        raise InputError(f"b2 must be > 0, got {b2}")
    fpr = np.asarray(t, dtype=float)
    if np.any((fpr < 0.0) | (fpr > 1.0)):
        raise InputError("false-positive rates must lie in [0, 1]")
    tpr = special.ndtr((a + special.ndtri(fpr)) / math.sqrt(b2))
    return float(tpr) if np.ndim(t) == 0 else tpr


def _pooled_index(chain: BrlChain, which: tuple[str, int]) -> int:
    group, index = which
    if group == "w" and 0 <= index < chain.m:
        return index
    if group == "z" and 0 <= index < chain.n:
        return chain.m + index
    raise InputError(f"no latent coordinate {group}[{index}]")


def rank_interval(chain: BrlChain, which: tuple[str, int]) -> tuple[float, float]:
    """Open interval keeping ``which`` (``("w", i)`` or ``("z", j)``) at its target rank."""
    k = _pooled_index(chain, which)
    pooled = chain.pooled()
    position = int(chain.rank_target[k]) - 1
    lower = -math.inf if position == 0 else float(pooled[chain.by_rank[position - 1]])
    upper = (
        math.inf
        if position == pooled.size - 1
        else float(pooled[chain.by_rank[position + 1]])
    )
    return lower, upper


def update_location(chain: BrlChain) -> float:
    chain.a = float(chain.rng.generator.normal(chain.w.mean(), math.sqrt(chain.b2 / chain.m)))
    return chain.a


def update_spread(chain: BrlChain) -> float:
    # inverse gamma with shape (m - 1)/2 and rate half the residual sum of squares
    shape = 0.5 * (chain.m - 1)
    rate = 0.5 * float(np.sum((chain.w - chain.a) ** 2))
    if not shape > 0.0 or not rate > 0.0:
        raise NumericalError(f"b2 conditional is improper (shape={shape}, rate={rate})")
    chain.b2 = rate / float(chain.rng.generator.gamma(shape))
    return chain.b2


def _draw_coordinates(chain: BrlChain, coords: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> None:
    # no float strictly inside (lower, upper): the chain is numerically stuck
    stuck = np.flatnonzero(~(np.nextafter(lower, np.inf) < upper))
    if stuck.size:
        local = int(stuck[0])
        k = int(coords[local])
        label = f"w[{k}]" if k < chain.m else f"z[{k - chain.m}]"
        raise NumericalError(
            f"degenerate truncation interval at coordinate {label}: "
            f"[{lower[local]!r}, {upper[local]!r}]"
        )
    is_w = coords < chain.m
    location = np.where(is_w, chain.a, 0.0)
    scale = np.where(is_w, math.sqrt(chain.b2), 1.0)
    draws = truncnorm_sample_array(location, scale, lower, upper, chain.rng)
    chain.w[coords[is_w]] = draws[is_w]
    chain.z[coords[~is_w] - chain.m] = draws[~is_w]


def _systematic_latents(chain: BrlChain) -> None:
    for k in range(chain.m + chain.n):
        which = ("w", k) if k < chain.m else ("z", k - chain.m)
        lower, upper = rank_interval(chain, which)
        _draw_coordinates(
            chain, np.array([k]), np.array([lower]), np.array([upper])
        )


def _checkerboard_latents(chain: BrlChain) -> None:
    # neighbours in rank order always sit in the other parity block
    size = chain.m + chain.n
    for start in (0, 1):
        positions = np.arange(start, size, 2)
        sorted_values = chain.pooled()[chain.by_rank]
        padded = np.concatenate([[-np.inf], sorted_values, [np.inf]])
        lower = padded[positions]
        upper = padded[positions + 2]
        _draw_coordinates(chain, chain.by_rank[positions], lower, upper)


def brl_sweep(chain: BrlChain, scan: str = "systematic") -> BrlChain:
    if scan not in SCAN_ORDERS:
        raise InputError(f"unknown scan order: {scan}")
    update_location(chain)
    update_spread(chain)
    if scan == "systematic":
        _systematic_latents(chain)
    else:
        _checkerboard_latents(chain)
    return chain


def init_chain(data: ScoreData, cfg: BrlConfig, rng: RngStream) -> BrlChain:
    """Normal scores at the observed ranks; (a, b2) from them unless ``cfg.init`` is set."""
    target = ranks(data.pooled())
    size = data.m + data.n
    latent = norm_quantile((target - 0.5) / size)
    w, z = latent[: data.m], latent[data.m :]
    if cfg.init is None:
        a0 = float(np.mean(w))
        b0 = max(float(np.var(w, ddof=1)), MIN_INITIAL_B2)
    else:
        a0, b0 = float(cfg.init[0]), float(cfg.init[1])
    return BrlChain(a=a0, b2=b0, w=w, z=z, rank_target=target, rng=rng)


def brl_run(
    data: ScoreData,
    cfg: BrlConfig,
    rng: RngStream,
    check_ranks: bool | None = None,
) -> BrlDraws:
    if check_ranks is None:
        check_ranks = DEBUG_RANK_CHECKS
    chain = init_chain(data, cfg, rng)
    kept = cfg.n_samples // cfg.thin
    a_draws = np.empty(kept)
    b2_draws = np.empty(kept)
    slot = 0
    for step in range(cfg.total_iterations):
        brl_sweep(chain, cfg.scan)
        if check_ranks and not chain.ranks_hold():
            raise NumericalError(f"rank constraint violated after sweep {step}")
        if step < cfg.burn_in or (step - cfg.burn_in + 1) % cfg.thin:
            continue
        if slot < kept:
            a_draws[slot] = chain.a
            b2_draws[slot] = chain.b2
            slot += 1
    auc = special.ndtr(a_draws / np.sqrt(b2_draws + 1.0))
    return BrlDraws(a=a_draws, b2=b2_draws, auc=auc)


def summarize_draws(
    draws: BrlDraws, level: float = 0.95
) -> tuple[float, float, CredibleInterval]:
    """Posterior mean, SD and equal-tailed interval of the AUC draws."""
    if len(draws) == 0:
        raise InputError("no draws to summarise")
    if not 0.0 < level < 1.0:
        raise InputError(f"level must lie in (0, 1), got {level}")
    tail = 0.5 * (1.0 - level)
    lower, upper = np.quantile(draws.auc, [tail, 1.0 - tail])
    sd = float(np.std(draws.auc, ddof=1)) if len(draws) > 1 else 0.0
    interval = CredibleInterval(
        lower=float(lower), upper=float(upper), level=level, kind="equal-tailed"
    )
    return float(np.mean(draws.auc)), sd, interval
