from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import IntEnum
from typing import Any, Iterator

import numpy as np
import pyarrow as pa

from auc_gibbs.config import (
    CALIBRATION_EPSILON,
    CALIBRATION_KAPPA_EXPONENT,
    CALIBRATION_MAX_ITERATIONS,
    DEFAULT_ALPHA,
    DEFAULT_SEED,
    FULL_BOOTSTRAP,
)
from auc_gibbs.errors import InputError
from auc_gibbs.inference.stats_core import TruncatedNormal


@dataclass(frozen=True, eq=False)
class ScoreData:
    """Group-1 scores ``u`` (U_1..U_m) and group-0 scores ``v`` (V_1..V_n)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        u = np.array(self.u, dtype=float).ravel()
        v = np.array(self.v, dtype=float).ravel()
        if u.size < 2 or v.size < 2:
            raise InputError(
                f"each group needs at least 2 scores, got m={u.size}, n={v.size}"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise InputError("scores must be finite")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def m(self) -> int:
        return int(self.u.size)

    @property
    def n(self) -> int:
        return int(self.v.size)

    def pooled(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    def has_ties(self) -> bool:
        pooled = np.sort(self.pooled())
        return bool(np.any(np.diff(pooled) == 0.0))


@dataclass(frozen=True)
class AucEstimate:
    theta_hat: float
    tau10_hat: float
    tau01_hat: float
    m: int
    n: int


@dataclass(frozen=True)
class Prior:
    kind: str = "flat"
    location: float | None = None
    scale: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "flat":
            if self.location is not None or self.scale is not None:
                raise InputError("the flat prior takes no parameters")
            return
        if self.kind != "truncnorm":
            raise InputError(f"unknown prior kind: {self.kind}")
        if self.location is None or self.scale is None:
            raise InputError("truncated normal prior needs location and scale")
        if not math.isfinite(self.location) or not self.scale > 0.0:
            raise InputError(
                f"truncated normal prior needs finite location and scale > 0, got {self.scale}"
            )

    @classmethod
    def flat(cls) -> Prior:
        return cls()

    @classmethod
    def truncated_normal(cls, location: float, scale: float) -> Prior:
        return cls(kind="truncnorm", location=float(location), scale=float(scale))

    @property
    def is_flat(self) -> bool:
        return self.kind == "flat"

    def describe(self) -> str:
        if self.is_flat:
            return "flat"
        return f"truncnorm:{self.location!r},{self.scale!r}"


@dataclass(frozen=True)
class GibbsPosterior:
    mu_mn: float
    sigma_mn: float
    omega: float
    theta_hat: float
    m: int
    n: int
    prior: Prior

    @property
    def distribution(self) -> TruncatedNormal:
        return TruncatedNormal(self.mu_mn, self.sigma_mn, 0.0, 1.0)


@dataclass(frozen=True)
class CredibleInterval:
    lower: float
    upper: float
    level: float
    kind: str = "HPD"

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict[str, Any]:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class CalibrationConfig:
    B: int = FULL_BOOTSTRAP
    alpha: float = DEFAULT_ALPHA
    epsilon: float = CALIBRATION_EPSILON
    kappa_exponent: float = CALIBRATION_KAPPA_EXPONENT
    omega_init: float | str = "auto"
    max_iterations: int = CALIBRATION_MAX_ITERATIONS
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.B < 1:
            raise InputError(f"bootstrap sample count must be >= 1, got {self.B}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.epsilon > 0.0:
            raise InputError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.5 < self.kappa_exponent <= 1.0:
            raise InputError(
                f"kappa exponent must lie in (0.5, 1], got {self.kappa_exponent}"
            )
        if self.max_iterations < 0:
            raise InputError("max_iterations must be >= 0")
        if isinstance(self.omega_init, str):
            if self.omega_init != "auto":
                raise InputError(f"omega_init must be 'auto' or > 0, got {self.omega_init}")
        elif not self.omega_init > 0.0:
            raise InputError(f"omega_init must be > 0, got {self.omega_init}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CalibrationIterate:
    t: int
    omega: float
    coverage: float
    delta: float


@dataclass(frozen=True)
class CalibrationTrace:
    omega_hat: float
    iterates: list[CalibrationIterate] = field(default_factory=list)
    converged: bool = False


@dataclass(frozen=True)
class BrlConfig:
    n_samples: int
    burn_in: int = 0
    thin: int = 1
    init: tuple[float, float] | None = None
    scan: str = "systematic"

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise InputError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.burn_in < 0:
            raise InputError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.thin < 1:
            raise InputError(f"thin must be >= 1, got {self.thin}")
        if self.init is not None and not self.init[1] > 0.0:
            raise InputError(f"initial b2 must be > 0, got {self.init[1]}")
        if self.scan not in {"systematic", "checkerboard"}:
            raise InputError(f"unknown scan order: {self.scan}")

    @property
    def total_iterations(self) -> int:
        return self.burn_in + self.n_samples

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["init"] = list(self.init) if self.init is not None else "normal_scores"
        return payload


@dataclass(frozen=True, eq=False)
class BrlDraws:
    a: np.ndarray
    b2: np.ndarray
    auc: np.ndarray

    def __len__(self) -> int:
        return int(self.auc.size)

    def __iter__(self) -> Iterator[tuple[float, float, float]]:
        for a, b2, auc in zip(self.a, self.b2, self.auc):
            yield float(a), float(b2), float(auc)


class ScenarioId(IntEnum):
    EX1 = 1
    EX2 = 2
    EX3 = 3
    EX4 = 4


@dataclass(frozen=True)
class ScenarioDefinition:
    scenario: ScenarioId
    u_law: str
    v_law: str
    reported_theta_star: float


SCENARIO_DEFINITIONS: list[ScenarioDefinition] = [
    ScenarioDefinition(ScenarioId.EX1, "N(2, 1)", "N(0, 1)", 0.9214),
    ScenarioDefinition(ScenarioId.EX2, "SN(3, 1, -4)", "N(0, 1)", 0.9665),
    ScenarioDefinition(
        ScenarioId.EX3, "0.2 N(-1, 1) + 0.8 N(2, 0.5^2)", "N(0, 1)", 0.8185
    ),
    ScenarioDefinition(ScenarioId.EX4, "2 - Exp(1)", "N(0, 1)", 0.7895),
]


@dataclass(frozen=True)
class StudyResult:
    scenario: int
    n: int
    method: str
    bias: float
    per_rep_abs_bias: float | None
    avg_posterior_sd: float
    mean_ci_length: float
    coverage: float
    covered: int
    replications: int
    seed: int

    @property
    def study_key(self) -> str:
        return f"ex{self.scenario}:n{self.n}:{self.method}:seed{self.seed}"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class OmegaStudyRow:
    scenario: int
    n: int
    omega_hats: list[float]
    converged: list[bool]
    omega_oracle: float
    seed: int

    @property
    def study_key(self) -> str:
        return f"ex{self.scenario}:n{self.n}:seed{self.seed}"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


STUDY_RESULTS_SCHEMA = pa.schema(
    [
        pa.field("study_key", pa.string()),
        pa.field("scenario", pa.int64()),
        pa.field("n", pa.int64()),
        pa.field("method", pa.string()),
        pa.field("bias", pa.float64()),
        pa.field("per_rep_abs_bias", pa.float64()),
        pa.field("avg_posterior_sd", pa.float64()),
        pa.field("mean_ci_length", pa.float64()),
        pa.field("coverage", pa.float64()),
        pa.field("covered", pa.int64()),
        pa.field("replications", pa.int64()),
        pa.field("seed", pa.int64()),
        pa.field("ingestion_run_id", pa.string()),
        pa.field("updated_at", pa.timestamp("us", tz="UTC")),
    ]
)

OMEGA_STUDY_SCHEMA = pa.schema(
    [
        pa.field("study_key", pa.string()),
        pa.field("scenario", pa.int64()),
        pa.field("n", pa.int64()),
        pa.field("replication", pa.int64()),
        pa.field("omega_hat", pa.float64()),
        pa.field("converged", pa.bool_()),
        pa.field("omega_oracle", pa.float64()),
        pa.field("seed", pa.int64()),
        pa.field("ingestion_run_id", pa.string()),
        pa.field("updated_at", pa.timestamp("us", tz="UTC")),
    ]
)

HISTORY_SCHEMA = pa.schema(
    [
        pa.field("ingestion_run_id", pa.string()),
        pa.field("job_name", pa.string()),
        pa.field("started_at", pa.timestamp("us", tz="UTC")),
        pa.field("finished_at", pa.timestamp("us", tz="UTC")),
        pa.field("status", pa.string()),
        pa.field("rows_written", pa.int64()),
        pa.field("error_summary", pa.string()),
    ]
)


def now_utc() -> datetime:
    return datetime.now(tz=timezone.utc)


def study_result_rows(results: list[StudyResult], run_id: str) -> list[dict[str, Any]]:
    updated_at = now_utc()
    rows: list[dict[str, Any]] = []
    for result in results:
        row = result.to_dict()
        row["study_key"] = result.study_key
        row["ingestion_run_id"] = run_id
        row["updated_at"] = updated_at
        rows.append(row)
    return rows


def omega_study_rows(table: list[OmegaStudyRow], run_id: str) -> list[dict[str, Any]]:
    updated_at = now_utc()
    rows: list[dict[str, Any]] = []
    for entry in table:
        for replication, (omega_hat, converged) in enumerate(
            zip(entry.omega_hats, entry.converged)
        ):
            rows.append(
                {
                    "study_key": entry.study_key,
                    "scenario": entry.scenario,
                    "n": entry.n,
                    "replication": replication,
                    "omega_hat": float(omega_hat),
                    "converged": bool(converged),
                    "omega_oracle": float(entry.omega_oracle),
                    "seed": entry.seed,
                    "ingestion_run_id": run_id,
                    "updated_at": updated_at,
                }
            )
    return rows
