from __future__ import annotations

from datetime import datetime, timezone

import pytest

from auc_gibbs.models import OmegaStudyRow, StudyResult, omega_study_rows, study_result_rows
from auc_gibbs.storage import lancedb_store as store_module
from auc_gibbs.storage.lancedb_store import EXPECTED_TABLES, LanceDBStore


def _result(n: int, coverage: float, seed: int = 1) -> StudyResult:
    return StudyResult(
        scenario=1,
        n=n,
        method="gibbs",
        bias=0.01,
        per_rep_abs_bias=0.02,
        avg_posterior_sd=0.03,
        mean_ci_length=0.12,
        coverage=coverage,
        covered=int(round(coverage * 10)),
        replications=10,
        seed=seed,
    )


def test_store_connects_to_configured_uri(monkeypatch, tmp_path) -> None:
    captured: list[str] = []

    def fake_connect(uri):
        captured.append(uri)
        return object()

    target = tmp_path / "results" / "lancedb"
    monkeypatch.setattr(store_module, "RESULTS_URI", str(target))
    monkeypatch.setattr(store_module.lancedb, "connect", fake_connect)

    LanceDBStore()

    assert captured == [str(target)]
    assert target.is_dir()


def test_reset_tables_drops_expected_tables_and_ignores_missing() -> None:
    class _DB:
        def __init__(self) -> None:
            self.dropped: list[str] = []

        def drop_table(self, name: str):
            if name == "omega_study":
                raise ValueError("Table 'omega_study' was not found")
            self.dropped.append(name)

    store = LanceDBStore.__new__(LanceDBStore)
    store.db = _DB()

    store.reset_tables()

    assert store.db.dropped == ["study_results", "history"]


def test_reset_tables_raises_on_other_errors() -> None:
    class _DB:
        def drop_table(self, name: str):
            raise OSError("permission denied")

    store = LanceDBStore.__new__(LanceDBStore)
    store.db = _DB()

    with pytest.raises(RuntimeError, match="Failed to drop table 'study_results'"):
        store.reset_tables()


def test_terminal_table_errors_are_classified() -> None:
    assert LanceDBStore._is_terminal_table_error(OSError("Permission denied"))
    assert not LanceDBStore._is_terminal_table_error(ValueError("commit conflict on _versions"))
    assert LanceDBStore._is_table_not_found_error(ValueError("Table foo does not exist"))


def test_ensure_tables_reports_each_table(tmp_path) -> None:
    store = LanceDBStore(str(tmp_path / "db"))
    seen: list[str] = []

    store.ensure_tables(on_table=seen.append)
    store.ensure_tables()

    assert seen == list(EXPECTED_TABLES)
    assert set(EXPECTED_TABLES) <= store.list_tables()


def test_study_results_are_replaced_by_key(tmp_path) -> None:
    store = LanceDBStore(str(tmp_path / "db"))
    store.replace_study_results(study_result_rows([_result(25, 0.9), _result(50, 0.8)], "run-1"))
    outcome = store.replace_study_results(study_result_rows([_result(25, 0.95)], "run-2"))

    assert outcome == {"inserted": 1, "updated": 0}
    assert store.count_table_rows("study_results") == 2
    rows = store.read_table("study_results", filters={"n": 25})
    assert len(rows) == 1
    assert rows[0]["coverage"] == 0.95
    assert rows[0]["ingestion_run_id"] == "run-2"
    assert rows[0]["study_key"] == "ex1:n25:gibbs:seed1"


def test_omega_rows_expand_per_replication(tmp_path) -> None:
    store = LanceDBStore(str(tmp_path / "db"))
    table = [
        OmegaStudyRow(
            scenario=2, n=25, omega_hats=[0.5, 0.7, 0.6], converged=[True, True, False],
            omega_oracle=0.55, seed=4,
        )
    ]
    store.replace_omega_rows(omega_study_rows(table, "run-1"))
    store.replace_omega_rows(omega_study_rows(table, "run-2"))

    rows = store.read_table("omega_study", filters={"study_key": "ex2:n25:seed4"})
    assert sorted(row["replication"] for row in rows) == [0, 1, 2]
    assert {row["ingestion_run_id"] for row in rows} == {"run-2"}
    assert [row["converged"] for row in sorted(rows, key=lambda r: r["replication"])] == [
        True,
        True,
        False,
    ]


def test_history_upsert_normalises_timestamps(tmp_path) -> None:
    store = LanceDBStore(str(tmp_path / "db"))
    store.upsert_history(
        {
            "ingestion_run_id": "run-1",
            "job_name": "simulate",
            "started_at": "2026-01-02T03:04:05Z",
            "finished_at": None,
            "status": "running",
            "rows_written": 0,
            "error_summary": None,
        }
    )
    store.upsert_history(
        {
            "ingestion_run_id": "run-1",
            "job_name": "simulate",
            "started_at": datetime(2026, 1, 2, 3, 4, 5),
            "finished_at": datetime(2026, 1, 2, 3, 9, 0, tzinfo=timezone.utc),
            "status": "success",
            "rows_written": "12",
            "error_summary": None,
        }
    )

    rows = store.read_table("history")
    assert len(rows) == 1
    assert rows[0]["status"] == "success"
    assert rows[0]["rows_written"] == 12
    assert rows[0]["started_at"] == datetime(2026, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def test_empty_replacement_is_a_no_op(tmp_path) -> None:
    store = LanceDBStore(str(tmp_path / "db"))
    assert store.replace_study_results([]) == {"inserted": 0, "updated": 0}


def test_unknown_table_is_rejected(tmp_path) -> None:
    store = LanceDBStore(str(tmp_path / "db"))
    with pytest.raises(ValueError, match="Unknown table: metrics"):
        store.read_table("metrics")


class _FlakyDB:
    def __init__(self, failures: list[Exception]) -> None:
        self.failures = list(failures)
        self.created: list[str] = []
        self.calls = 0

    def create_table(self, name: str, schema=None, mode: str = "create", exist_ok: bool = False):
        self.calls += 1
        if self.failures:
            raise self.failures.pop(0)
        self.created.append(name)


def _store_with(db) -> LanceDBStore:
    store = LanceDBStore.__new__(LanceDBStore)
    store.db = db
    return store


def test_create_table_retries_transient_errors(monkeypatch) -> None:
    sleeps: list[float] = []
    monkeypatch.setattr(store_module.time, "sleep", sleeps.append)
    db = _FlakyDB([RuntimeError("commit conflict on version 3"), OSError("_versions/2.manifest")])

    _store_with(db)._create_table("history", create_mode="exist_ok")

    assert db.created == ["history"]
    assert db.calls == 3
    assert sleeps == [store_module.TABLE_READY_SLEEP_SECONDS] * 2


def test_create_table_stops_on_terminal_errors(monkeypatch) -> None:
    monkeypatch.setattr(store_module.time, "sleep", lambda _s: None)
    db = _FlakyDB([PermissionError("Permission denied: results/lancedb")])

    with pytest.raises(RuntimeError, match="Terminal error while ensuring table 'history'"):
        _store_with(db)._create_table("history", create_mode="exist_ok")
    assert db.calls == 1


def test_create_table_gives_up_after_max_attempts(monkeypatch) -> None:
    monkeypatch.setattr(store_module.time, "sleep", lambda _s: None)
    attempts = store_module.TABLE_READY_MAX_ATTEMPTS
    db = _FlakyDB([RuntimeError("operation timed out")] * attempts)

    with pytest.raises(RuntimeError, match=f"after {attempts} attempts"):
        _store_with(db)._create_table("study_results", create_mode="exist_ok")
    assert db.calls == attempts
    assert db.created == []


def test_study_rows_keep_missing_per_rep_bias_as_null() -> None:
    row = study_result_rows([_result(25, 0.9)], "run-1")[0]
    row["per_rep_abs_bias"] = None

    normalized = LanceDBStore._normalize_study_row(row)

    assert normalized["per_rep_abs_bias"] is None
    assert normalized["bias"] == 0.01
