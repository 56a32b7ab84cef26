"""Normal and truncated-normal numerics, ranks, and reproducible random streams.

Everything that touches the Gaussian tail goes through ``_log_mass`` and
``_standard_ppf``: intervals in the upper half-line are reflected into the lower
one so that ``log_ndtr`` and ``ndtri_exp`` see the small probabilities directly.
Moments take the mirror route into the upper tail, where ``erfcx`` keeps the
Mills ratios finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special

from auc_gibbs.errors import InputError, NumericalError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# Below this interval mass the inverse-CDF path hands over to tail rejection.
_MIN_LOG_MASS = math.log(1e-280)
_MAX_REJECTION_ATTEMPTS = 10_000


class RngStream:
    """A single-owner random stream identified by ``(master_seed, stream_id)``.

    Child streams come from ``substream`` and never overlap with their parent or
    siblings, so replications and bootstrap draws can run in any order.
    """

    def __init__(self, master_seed: int, stream_id: int = 0, *subkeys: int) -> None:
        if stream_id < 0 or any(key < 0 for key in subkeys):
            raise InputError("stream ids must be non-negative integers")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.spawn_key: tuple[int, ...] = (self.stream_id, *(int(k) for k in subkeys))
        sequence = np.random.SeedSequence(
            entropy=self.master_seed % 2**64,
            spawn_key=self.spawn_key,
        )
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def substream(self, *index: int) -> RngStream:
        return RngStream(self.master_seed, *self.spawn_key, *index)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, spawn_key={self.spawn_key})"


def _scalar_or_array(value: np.ndarray, like: Any) -> Any:
    if np.ndim(like) == 0:
        return float(value)
    return value


def norm_pdf(x: Any) -> Any:
    z = np.asarray(x, dtype=float)
    return _scalar_or_array(np.exp(-0.5 * z * z - _LOG_SQRT_2PI), x)


def norm_cdf(x: Any) -> Any:
    return _scalar_or_array(special.ndtr(np.asarray(x, dtype=float)), x)


def norm_quantile(p: Any) -> Any:
    q = np.asarray(p, dtype=float)
    if np.any(~(q > 0.0)) or np.any(~(q < 1.0)):
        raise InputError(f"norm_quantile requires 0 < p < 1, got {p!r}")
    return _scalar_or_array(special.ndtri(q), p)


def _log_phi(z: np.ndarray) -> np.ndarray:
    return -0.5 * z * z - _LOG_SQRT_2PI


def _log_mass(a: Any, b: Any) -> np.ndarray:
    """log(Phi(b) - Phi(a)) for a <= b, accurate when both bounds sit in one tail."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    flip = a > 0.0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    log_hi = special.log_ndtr(hi)
    log_lo = special.log_ndtr(lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        return log_hi + np.log1p(-np.exp(log_lo - log_hi))


def _standard_ppf(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Quantile ``u`` of N(0, 1) truncated to (a, b), computed in log space."""
    flip = a > 0.0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    q = np.where(flip, 1.0 - u, u)
    log_z = _log_mass(lo, hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.logaddexp(special.log_ndtr(lo), np.log(q) + log_z)
    x = np.clip(special.ndtri_exp(np.minimum(log_p, 0.0)), lo, hi)
    return np.where(flip, -x, x)


def _tail_rejection(lo: float, hi: float, generator: np.random.Generator) -> float:
    """Exponential (or uniform, for narrow intervals) rejection on lo >= 0."""
    lam = 0.5 * (lo + math.sqrt(lo * lo + 4.0))
    width = hi - lo
    for _attempt in range(_MAX_REJECTION_ATTEMPTS):
        if width < 1.0 / lam:
            x = lo + width * generator.random()
            log_accept = 0.5 * (lo * lo - x * x)
        else:
            x = lo + generator.exponential() / lam
            if x >= hi:
                continue
            log_accept = -0.5 * (x - lam) ** 2
        if math.log(generator.random()) <= log_accept:
            return x
    raise NumericalError(
        f"degenerate truncation: rejection sampler failed on ({lo}, {hi})"
    )


@dataclass(frozen=True)
class TruncatedNormal:
    location: float
    scale: float
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.location) and math.isfinite(self.scale)):
            raise InputError("truncated normal location and scale must be finite")
        if self.scale <= 0.0:
            raise InputError(f"truncated normal scale must be > 0, got {self.scale}")
        if not self.lower < self.upper:
            raise InputError(
                f"truncated normal needs lower < upper, got [{self.lower}, {self.upper}]"
            )

    @property
    def alpha(self) -> float:
        return (self.lower - self.location) / self.scale

    @property
    def beta(self) -> float:
        return (self.upper - self.location) / self.scale

    def log_mass(self) -> float:
        return float(_log_mass(self.alpha, self.beta))

    def pdf(self, x: Any) -> Any:
        values = np.asarray(x, dtype=float)
        z = (values - self.location) / self.scale
        inside = (values >= self.lower) & (values <= self.upper)
        density = np.where(
            inside, np.exp(_log_phi(z) - self.log_mass()) / self.scale, 0.0
        )
        return _scalar_or_array(density, x)

    def cdf(self, x: Any) -> Any:
        values = np.asarray(x, dtype=float)
        z = np.clip((values - self.location) / self.scale, self.alpha, self.beta)
        with np.errstate(divide="ignore", invalid="ignore"):
            result = np.exp(_log_mass(self.alpha, z) - self.log_mass())
        result = np.where(values <= self.lower, 0.0, np.where(values >= self.upper, 1.0, result))
        return _scalar_or_array(np.clip(result, 0.0, 1.0), x)

    def ppf(self, q: Any) -> Any:
        probs = np.asarray(q, dtype=float)
        if np.any((probs < 0.0) | (probs > 1.0)):
            raise InputError("ppf requires probabilities in [0, 1]")
        a = np.full(probs.shape, self.alpha)
        b = np.full(probs.shape, self.beta)
        x = self.location + self.scale * _standard_ppf(a, b, probs)
        return _scalar_or_array(np.clip(x, self.lower, self.upper), q)


# Standardized intervals narrower than this (width times |a| + |b|) go to quadrature.
_NARROW_SPREAD = 1.0
# Past this lower bound the tail is an exponential with rate a to double precision.
_EXPONENTIAL_TAIL = 1e4
_MILLS_SERIES_START = 8.0
_MILLS_TERMS = 60
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _mills_excess(x: float) -> float:
    """phi(x) / Q(x) - x for x >= 0, where Q is the upper tail probability."""
    if x < _MILLS_SERIES_START:
        return math.sqrt(2.0 / math.pi) / float(special.erfcx(x / math.sqrt(2.0))) - x
    t = x
    for k in range(_MILLS_TERMS, 1, -1):
        t = x + k / t
    return 1.0 / t


def _narrow_moments(a: float, b: float) -> tuple[float, float]:
    centre = 0.5 * (a + b)
    y = 0.5 * (b - a) * _GAUSS_NODES
    log_w = -centre * y - 0.5 * y * y
    w = _GAUSS_WEIGHTS * np.exp(log_w - log_w.max())
    w /= w.sum()
    shift = float(np.dot(w, y))
    return centre + shift, float(np.dot(w, (y - shift) ** 2))


def _exponential_tail_moments(a: float, width: float) -> tuple[float, float]:
    rate_width = a * width
    if rate_width > 700.0:
        return a + 1.0 / a, 1.0 / (a * a)
    shift = 1.0 / a - width / math.expm1(rate_width)
    edge = width / (2.0 * math.sinh(0.5 * rate_width))
    return a + shift, 1.0 / (a * a) - edge * edge


def _upper_tail_moments(a: float, b: float) -> tuple[float, float]:
    """Moments on (a, b) with 0 <= a, written as offsets from a so nothing cancels."""
    width = b - a
    if a > _EXPONENTIAL_TAIL:
        return _exponential_tail_moments(a, width)
    excess_a = _mills_excess(a)
    if math.isinf(b):
        shift = excess_a
        edge_term = 0.0
    else:
        excess_b = _mills_excess(b)
        log_rho = (
            -0.5 * width * (a + b)
            + math.log(float(special.erfcx(b / math.sqrt(2.0))))
            - math.log(float(special.erfcx(a / math.sqrt(2.0))))
        )
        rho = math.exp(log_rho)
        keep = -math.expm1(log_rho)
        shift = (excess_a - rho * (width + excess_b)) / keep
        edge_term = width * (b + excess_b) * rho / keep if rho > 0.0 else 0.0
    variance = 1.0 - a * shift - shift * shift - edge_term
    if not variance > 0.0:
        if a < _MILLS_SERIES_START:
            raise NumericalError(f"nonpositive truncated-normal variance on ({a}, {b})")
        return _exponential_tail_moments(a, width)
    return a + shift, variance


def _standard_moments(a: float, b: float) -> tuple[float, float]:
    """Mean and variance of N(0, 1) truncated to (a, b)."""
    if b <= 0.0:
        mean, variance = _standard_moments(-b, -a)
        return -mean, variance
    width = b - a
    if math.isfinite(width) and width * (abs(a) + abs(b)) <= _NARROW_SPREAD:
        return _narrow_moments(a, b)
    if a >= 0.0:
        return _upper_tail_moments(a, b)
    # a < 0 < b and wide: the mass is at least Phi(1) - 1/2
    mass = float(special.ndtr(b) - special.ndtr(a))
    r_a = float(norm_pdf(a)) / mass if math.isfinite(a) else 0.0
    r_b = float(norm_pdf(b)) / mass if math.isfinite(b) else 0.0
    a_term = a * r_a if math.isfinite(a) else 0.0
    b_term = b * r_b if math.isfinite(b) else 0.0
    mean = r_a - r_b
    return mean, 1.0 + a_term - b_term - mean * mean


def truncnorm_moments(d: TruncatedNormal) -> tuple[float, float]:
    if not math.isfinite(d.log_mass()):
        raise NumericalError(f"degenerate truncation: zero mass on [{d.lower}, {d.upper}]")
    mean, variance = _standard_moments(d.alpha, d.beta)
    return d.location + d.scale * mean, d.scale**2 * variance


def truncnorm_sample_array(
    location: Any,
    scale: Any,
    lower: Any,
    upper: Any,
    rng: RngStream,
) -> np.ndarray:
    loc, sd, lo, hi = np.broadcast_arrays(
        np.asarray(location, dtype=float),
        np.asarray(scale, dtype=float),
        np.asarray(lower, dtype=float),
        np.asarray(upper, dtype=float),
    )
    shape = loc.shape
    loc, sd, lo, hi = (np.atleast_1d(arr).ravel() for arr in (loc, sd, lo, hi))
    if np.any(sd <= 0.0):
        raise InputError("truncated normal scale must be > 0")
    inner_lo = np.nextafter(lo, np.inf)
    inner_hi = np.nextafter(hi, -np.inf)
    bad = np.flatnonzero(~(inner_lo < hi) | ~(lo < inner_hi))
    if bad.size:
        i = int(bad[0])
        raise NumericalError(
            f"degenerate truncation interval at index {i}: [{lo[i]!r}, {hi[i]!r}]"
        )

    a = (lo - loc) / sd
    b = (hi - loc) / sd
    u = rng.generator.random(a.shape)
    x = _standard_ppf(a, b, u)

    tiny = np.flatnonzero(_log_mass(a, b) < _MIN_LOG_MASS)
    for i in tiny:
        ai, bi = float(a[i]), float(b[i])
        if ai >= 0.0:
            x[i] = _tail_rejection(ai, bi, rng.generator)
        elif bi <= 0.0:
            x[i] = -_tail_rejection(-bi, -ai, rng.generator)
        else:
            raise NumericalError(
                f"degenerate truncation interval at index {int(i)}: [{lo[i]!r}, {hi[i]!r}]"
            )

    draws = np.clip(loc + sd * x, inner_lo, inner_hi)
    return draws.reshape(shape)


def truncnorm_sample(d: TruncatedNormal, rng: RngStream) -> float:
    draws = truncnorm_sample_array(d.location, d.scale, d.lower, d.upper, rng)
    return float(draws)


def ranks(x: Any) -> np.ndarray:
    values = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(values)):
        raise InputError("ranks require finite values")
    order = np.argsort(values, kind="stable")
    if values.size > 1 and np.any(np.diff(values[order]) == 0.0):
        raise InputError("ties detected: rank likelihood requires tie-free scores")
    result = np.empty(values.size, dtype=np.int64)
    result[order] = np.arange(1, values.size + 1)
    return result
