from __future__ import annotations

import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from uuid import uuid4

from auc_gibbs.config import (
    DESK_BOOTSTRAP,
    DESK_BRL_BURN_IN,
    DESK_BRL_SAMPLES,
    DESK_REPLICATIONS,
    FIXTURES_DIR,
    FULL_BOOTSTRAP,
    FULL_BRL_BURN_IN,
    FULL_BRL_SAMPLES,
    FULL_REPLICATIONS,
)
from auc_gibbs.errors import InputError
from auc_gibbs.inference.stats_core import RngStream
from auc_gibbs.models import Prior, ScenarioId
from auc_gibbs.storage.lancedb_store import LanceDBStore

# stream id 0 is reserved for oracle draws; scenarios use their own id (1..4)
ORACLE_STREAM_ID = 0


@dataclass(frozen=True)
class ScalePreset:
    replications: int
    bootstrap: int
    brl_samples: int
    brl_burn_in: int


DESK_SCALE = ScalePreset(
    replications=DESK_REPLICATIONS,
    bootstrap=DESK_BOOTSTRAP,
    brl_samples=DESK_BRL_SAMPLES,
    brl_burn_in=DESK_BRL_BURN_IN,
)
FULL_SCALE = ScalePreset(
    replications=FULL_REPLICATIONS,
    bootstrap=FULL_BOOTSTRAP,
    brl_samples=FULL_BRL_SAMPLES,
    brl_burn_in=FULL_BRL_BURN_IN,
)


@dataclass
class RunContext:
    job_name: str
    run_id: str
    started_at: datetime


def utc_now() -> datetime:
    return datetime.now(tz=timezone.utc)


def new_run_id(job_name: str) -> str:
    ts = utc_now().strftime("%Y%m%dT%H%M%SZ")
    return f"{job_name}:{ts}:{uuid4().hex[:8]}"


def log(tag: str, message: str) -> None:
    print(f"[{tag}] {message}", file=sys.stderr, flush=True)


def build_store(*, reset_tables: bool = False, uri: str | None = None) -> LanceDBStore:
    store = LanceDBStore(uri)
    if reset_tables:
        store.reset_tables()
    store.ensure_tables()
    return store


def start_run(job_name: str, run_id: str | None = None) -> RunContext:
    return RunContext(
        job_name=job_name,
        run_id=run_id or new_run_id(job_name),
        started_at=utc_now(),
    )


def finish_run(
    store: LanceDBStore,
    run: RunContext,
    *,
    status: str,
    rows_written: int,
    error_summary: str | None = None,
) -> None:
    store.upsert_history(
        {
            "ingestion_run_id": run.run_id,
            "job_name": run.job_name,
            "started_at": run.started_at,
            "finished_at": utc_now(),
            "status": status,
            "rows_written": rows_written,
            "error_summary": error_summary,
        }
    )


def resolve_fixture_path(filename: str) -> Path:
    path = FIXTURES_DIR / filename
    if not path.exists():
        raise FileNotFoundError(f"Fixture file not found: {path}")
    return path


def scale_preset(full: bool) -> ScalePreset:
    return FULL_SCALE if full else DESK_SCALE


def replication_stream(seed: int, scenario: ScenarioId, n: int, rep: int) -> RngStream:
    return RngStream(seed, int(scenario), n, rep)


def oracle_stream(seed: int, scenario: ScenarioId, n: int) -> RngStream:
    return RngStream(seed, ORACLE_STREAM_ID, int(scenario), n)


def parse_n_grid(raw: str) -> tuple[int, ...]:
    text = raw.strip()
    if not text:
        return ()
    try:
        grid = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise InputError(f"n-grid must be comma-separated integers, got {raw!r}") from exc
    if any(n < 2 for n in grid):
        raise InputError(f"every n in the grid must be >= 2, got {raw!r}")
    return grid


def parse_prior(raw: str) -> Prior:
    text = raw.strip().lower()
    if text == "flat":
        return Prior.flat()
    if text.startswith("truncnorm:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) == 2:
            try:
                return Prior.truncated_normal(float(parts[0]), float(parts[1]))
            except ValueError as exc:
                raise InputError(f"invalid prior parameters in {raw!r}") from exc
    raise InputError(f"prior must be 'flat' or 'truncnorm:LOC,SCALE', got {raw!r}")


def parse_pair(raw: str, label: str) -> tuple[float, float]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise InputError(f"{label} must look like 'x,y', got {raw!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise InputError(f"{label} must hold two numbers, got {raw!r}") from exc
