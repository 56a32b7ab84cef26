from __future__ import annotations

import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import lancedb
import pyarrow as pa
import pyarrow.compute as pc

from auc_gibbs.config import RESULTS_URI
from auc_gibbs.models import HISTORY_SCHEMA, OMEGA_STUDY_SCHEMA, STUDY_RESULTS_SCHEMA

TABLE_SCHEMAS = {
    "study_results": STUDY_RESULTS_SCHEMA,
    "omega_study": OMEGA_STUDY_SCHEMA,
    "history": HISTORY_SCHEMA,
}
EXPECTED_TABLES = ("study_results", "omega_study", "history")
# transient create failures (commit conflicts, half-written _versions) are retried
TABLE_READY_MAX_ATTEMPTS = 5
TABLE_READY_SLEEP_SECONDS = 0.2


class LanceDBStore:
    """Local LanceDB directory holding study cells, learning-rate studies and run history."""

    def __init__(self, uri: str | None = None):
        self.uri = uri or RESULTS_URI
        if "://" not in self.uri:
            Path(self.uri).mkdir(parents=True, exist_ok=True)
        self.db = lancedb.connect(self.uri)

    def list_tables(self) -> set[str]:
        return {str(name) for name in self.db.table_names()}

    def ensure_tables(self, on_table: Callable[[str], None] | None = None) -> None:
        for table_name in EXPECTED_TABLES:
            if on_table is not None:
                on_table(table_name)
            self._create_table(table_name, create_mode="exist_ok")

    def reset_tables(self) -> None:
        for table_name in EXPECTED_TABLES:
            try:
                self.db.drop_table(table_name)
            except Exception as exc:
                if self._is_table_not_found_error(exc):
                    continue
                raise RuntimeError(
                    f"Failed to drop table '{table_name}': {exc}"
                ) from exc

    def _create_table(self, table_name: str, *, create_mode: str) -> None:
        schema = TABLE_SCHEMAS[table_name]
        last_error: Exception | None = None
        for _attempt in range(TABLE_READY_MAX_ATTEMPTS):
            try:
                if create_mode == "exist_ok":
                    self.db.create_table(
                        table_name, schema=schema, mode="create", exist_ok=True
                    )
                else:
                    self.db.create_table(table_name, schema=schema, mode=create_mode)
                return
            except Exception as exc:
                last_error = exc
                if self._is_terminal_table_error(exc):
                    raise RuntimeError(
                        f"Terminal error while ensuring table '{table_name}': {exc}"
                    ) from exc
                time.sleep(TABLE_READY_SLEEP_SECONDS)
        raise RuntimeError(
            f"Failed to ensure table '{table_name}' after "
            f"{TABLE_READY_MAX_ATTEMPTS} attempts. Last error: {last_error}"
        ) from last_error

    @staticmethod
    def _is_terminal_table_error(exc: Exception) -> bool:
        msg = str(exc).lower()
        terminal_tokens = [
            "permission denied",
            "read-only file system",
            "schema",
            "type mismatch",
            "invalid type",
        ]
        transient_tokens = [
            "table not found",
            "was not found",
            "_versions",
            "commit conflict",
            "timed out",
        ]
        if any(token in msg for token in transient_tokens):
            return False
        return any(token in msg for token in terminal_tokens)

    @staticmethod
    def _is_table_not_found_error(exc: Exception) -> bool:
        msg = str(exc).lower()
        return "not found" in msg or "_versions" in msg or "does not exist" in msg

    def _open_table(self, table_name: str):
        if table_name not in TABLE_SCHEMAS:
            raise ValueError(f"Unknown table: {table_name}")
        try:
            return self.db.open_table(table_name)
        except Exception as open_error:
            if not self._is_table_not_found_error(open_error):
                raise RuntimeError(
                    f"Failed to open table '{table_name}': {open_error}"
                ) from open_error
        self._create_table(table_name, create_mode="exist_ok")
        return self.db.open_table(table_name)

    def _replace_by_key(
        self, table_name: str, key_column: str, rows: list[dict[str, Any]]
    ) -> dict[str, int]:
        if not rows:
            return {"inserted": 0, "updated": 0}
        table = self._open_table(table_name)
        keys = sorted({str(row[key_column]) for row in rows})
        for key in keys:
            key_sql = key.replace("'", "''")
            table.delete(f"{key_column} = '{key_sql}'")
        table.add(rows, mode="append")
        return {"inserted": len(rows), "updated": 0}

    def replace_study_results(self, rows: list[dict[str, Any]]) -> dict[str, int]:
        normalized = [self._normalize_study_row(row) for row in rows]
        return self._replace_by_key("study_results", "study_key", normalized)

    def replace_omega_rows(self, rows: list[dict[str, Any]]) -> dict[str, int]:
        normalized = [self._normalize_omega_row(row) for row in rows]
        return self._replace_by_key("omega_study", "study_key", normalized)

    def upsert_history(self, row: dict[str, Any]) -> dict[str, int]:
        normalized = self._normalize_history_row(row)
        return self._replace_by_key("history", "ingestion_run_id", [normalized])

    def read_table(
        self, table_name: str, *, filters: dict[str, Any] | None = None
    ) -> list[dict[str, Any]]:
        data: pa.Table = self._open_table(table_name).to_arrow()
        for column, value in (filters or {}).items():
            data = data.filter(pc.equal(data[column], pa.scalar(value)))
        return data.to_pylist()

    def count_table_rows(self, table_name: str) -> int:
        return int(self._open_table(table_name).count_rows())

    @staticmethod
    def _normalize_study_row(row: dict[str, Any]) -> dict[str, Any]:
        normalized = dict(row)
        for key in ("scenario", "n", "covered", "replications", "seed"):
            normalized[key] = int(normalized[key])
        per_rep = normalized.get("per_rep_abs_bias")
        normalized["per_rep_abs_bias"] = None if per_rep is None else float(per_rep)
        for key in (
            "bias",
            "avg_posterior_sd",
            "mean_ci_length",
            "coverage",
        ):
            normalized[key] = float(normalized[key])
        normalized["method"] = str(normalized["method"])
        normalized["study_key"] = str(normalized["study_key"])
        normalized["ingestion_run_id"] = str(normalized.get("ingestion_run_id", ""))
        normalized["updated_at"] = LanceDBStore._normalize_timestamp(
            normalized.get("updated_at")
        )
        return normalized

    @staticmethod
    def _normalize_omega_row(row: dict[str, Any]) -> dict[str, Any]:
        normalized = dict(row)
        for key in ("scenario", "n", "replication", "seed"):
            normalized[key] = int(normalized[key])
        normalized["omega_hat"] = float(normalized["omega_hat"])
        normalized["omega_oracle"] = float(normalized["omega_oracle"])
        normalized["converged"] = bool(normalized["converged"])
        normalized["ingestion_run_id"] = str(normalized.get("ingestion_run_id", ""))
        normalized["updated_at"] = LanceDBStore._normalize_timestamp(
            normalized.get("updated_at")
        )
        return normalized

    @staticmethod
    def _normalize_history_row(row: dict[str, Any]) -> dict[str, Any]:
        normalized = dict(row)
        for key in ("started_at", "finished_at"):
            normalized[key] = LanceDBStore._normalize_timestamp(normalized.get(key))
        normalized["rows_written"] = int(normalized.get("rows_written", 0))
        normalized["error_summary"] = normalized.get("error_summary")
        return normalized

    @staticmethod
    def _normalize_timestamp(value: Any) -> datetime:
        if value is None:
            return datetime.now(tz=timezone.utc)
        if isinstance(value, datetime):
            if value.tzinfo is None:
                return value.replace(tzinfo=timezone.utc)
            return value.astimezone(timezone.utc)
        raw = str(value).strip()
        if raw.endswith("Z"):
            raw = raw[:-1] + "+00:00"
        parsed = datetime.fromisoformat(raw)
        if parsed.tzinfo is None:
            parsed = parsed.replace(tzinfo=timezone.utc)
        return parsed.astimezone(timezone.utc)
