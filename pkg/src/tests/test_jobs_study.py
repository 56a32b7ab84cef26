from __future__ import annotations

import math

import pytest

from auc_gibbs.errors import InputError
from auc_gibbs.jobs import omega_study as omega_job
from auc_gibbs.jobs import run_study as study_job
from auc_gibbs.jobs.common import parse_n_grid, parse_pair, parse_prior
from auc_gibbs.jobs.run_study import ReplicationOutcome, run_replication, run_study, summarize_cell
from auc_gibbs.models import BrlConfig, CalibrationConfig, OmegaStudyRow, Prior, ScenarioId
from auc_gibbs.sources.scenarios import true_auc


class _Store:
    def __init__(self, fail_on_write: bool = False) -> None:
        self.fail_on_write = fail_on_write
        self.study_rows: list[dict] = []
        self.omega_rows: list[dict] = []
        self.history: list[dict] = []

    def replace_study_results(self, rows):
        if self.fail_on_write:
            raise RuntimeError("disk full")
        self.study_rows.extend(rows)
        return {"inserted": len(rows), "updated": 0}

    def replace_omega_rows(self, rows):
        self.omega_rows.extend(rows)
        return {"inserted": len(rows), "updated": 0}

    def upsert_history(self, row):
        self.history.append(row)
        return {"inserted": 1, "updated": 0}


GIBBS_CFG = CalibrationConfig(B=100, seed=3)


def test_zero_replications_produce_no_cells() -> None:
    assert run_study(ScenarioId.EX1, (10, 20), "gibbs", 0, GIBBS_CFG) == []


def test_unknown_method_is_rejected() -> None:
    with pytest.raises(InputError, match="method must be one of"):
        run_study(ScenarioId.EX1, (10,), "bayes", 3, GIBBS_CFG)


def test_summarize_cell_aggregates_outcomes() -> None:
    theta_star = true_auc(ScenarioId.EX1)
    outcomes = [
        ReplicationOutcome(theta_star + 0.02, 0.05, theta_star - 0.1, theta_star + 0.1),
        ReplicationOutcome(theta_star - 0.04, 0.03, theta_star + 0.01, theta_star + 0.2),
    ]
    cell = summarize_cell(
        outcomes, scenario=ScenarioId.EX1, n=30, method="gibbs", seed=5, per_rep_bias=True
    )

    assert cell.bias == pytest.approx(0.01)
    assert cell.per_rep_abs_bias == pytest.approx(0.03)
    assert cell.avg_posterior_sd == pytest.approx(0.04)
    assert cell.mean_ci_length == pytest.approx((0.2 + 0.19) / 2)
    assert (cell.covered, cell.replications, cell.coverage) == (1, 2, 0.5)
    assert cell.study_key == "ex1:n30:gibbs:seed5"

    plain = summarize_cell(outcomes, scenario=ScenarioId.EX1, n=30, method="gibbs", seed=5)
    assert plain.per_rep_abs_bias is None
    assert plain.bias == cell.bias


def test_study_is_reproducible_and_replications_are_independent() -> None:
    first = run_study(ScenarioId.EX2, (15,), "gibbs", 4, GIBBS_CFG, seed=11)
    second = run_study(ScenarioId.EX2, (15,), "gibbs", 4, GIBBS_CFG, seed=11)
    assert first == second

    outcomes = [
        run_replication(rep, scenario=ScenarioId.EX2, n=15, method="gibbs", cfg=GIBBS_CFG, seed=11)
        for rep in range(4)
    ]
    rebuilt = summarize_cell(outcomes, scenario=ScenarioId.EX2, n=15, method="gibbs", seed=11)
    assert rebuilt == first[0]


def test_parallel_workers_match_serial_run() -> None:
    serial = run_study(ScenarioId.EX1, (12,), "gibbs", 3, GIBBS_CFG, seed=2)
    parallel = run_study(ScenarioId.EX1, (12,), "gibbs", 3, GIBBS_CFG, seed=2, workers=2)
    assert serial == parallel


def test_brl_cells_report_equal_tailed_summaries() -> None:
    cfg = BrlConfig(n_samples=200, burn_in=50, scan="checkerboard")
    [cell] = run_study(ScenarioId.EX3, (12,), "brl", 2, cfg, seed=8, check_ranks=True)

    assert cell.method == "brl"
    assert cell.replications == 2
    assert 0.0 < cell.avg_posterior_sd < 0.5
    assert 0.0 <= cell.coverage <= 1.0


def test_run_persists_rows_and_success_history(capsys) -> None:
    store = _Store()
    result = study_job.run(
        scenario=ScenarioId.EX1,
        n_grid=(10, 14),
        replications=2,
        seed=4,
        workers=1,
        store=store,
        run_id="run-study-test",
    )

    assert result["kind"] == "study"
    assert result["rows_written"] == 2
    assert [row["n"] for row in store.study_rows] == [10, 14]
    assert {row["ingestion_run_id"] for row in store.study_rows} == {"run-study-test"}
    assert [row["status"] for row in store.history] == ["success"]
    assert store.history[0]["rows_written"] == 2
    assert "[run_study] scenario=1 n=10 method=gibbs reps=2" in capsys.readouterr().err


def test_run_records_failed_history_and_reraises() -> None:
    store = _Store(fail_on_write=True)

    with pytest.raises(RuntimeError, match="disk full"):
        study_job.run(
            scenario=ScenarioId.EX1, n_grid=(10,), replications=1, workers=1, store=store
        )

    assert len(store.history) == 1
    assert store.history[0]["status"] == "failed"
    assert store.history[0]["error_summary"] == "disk full"
    assert store.history[0]["job_name"] == "run_study"


def test_run_without_store_never_builds_one(monkeypatch) -> None:
    def _fail(**_kwargs):
        raise AssertionError("store should not be built")

    monkeypatch.setattr(study_job, "build_store", _fail)
    result = study_job.run(
        scenario=ScenarioId.EX4, n_grid=(10,), replications=1, workers=1, persist=False
    )
    assert result["rows_written"] == 0
    assert len(result["results"]) == 1
    assert result["per_rep_bias"] is False
    assert result["results"][0]["per_rep_abs_bias"] is None


def test_per_rep_bias_is_only_computed_on_request() -> None:
    flagged = study_job.run(
        scenario=ScenarioId.EX4,
        n_grid=(10,),
        replications=2,
        workers=1,
        persist=False,
        per_rep_bias=True,
    )
    plain = study_job.run(
        scenario=ScenarioId.EX4, n_grid=(10,), replications=2, workers=1, persist=False
    )

    [cell] = flagged["results"]
    assert flagged["per_rep_bias"] is True
    assert cell["per_rep_abs_bias"] >= cell["bias"]
    assert plain["results"][0]["bias"] == cell["bias"]


def test_omega_study_rows_hold_one_rate_per_replication() -> None:
    table = omega_job.omega_study(ScenarioId.EX1, (10, 20), 3, GIBBS_CFG, seed=6, mc_reps=600)

    assert [row.n for row in table] == [10, 20]
    for row in table:
        assert len(row.omega_hats) == len(row.converged) == 3
        assert all(omega > 0.0 for omega in row.omega_hats)
        assert row.omega_oracle > 0.0


def test_omega_study_empty_grid() -> None:
    assert omega_job.omega_study(ScenarioId.EX1, (), 3, GIBBS_CFG, mc_reps=600) == []
    assert parse_n_grid("") == ()


def _synthetic_rows() -> list[OmegaStudyRow]:
    return [
        OmegaStudyRow(
            scenario=1, n=n, omega_hats=[2.0 / n, 4.0 / n, 8.0 / n],
            converged=[True, True, True], omega_oracle=4.0 / n, seed=1,
        )
        for n in (25, 50, 100)
    ]


def test_oracle_slope_and_median_gaps() -> None:
    table = _synthetic_rows()

    assert omega_job.oracle_slope(table) == pytest.approx(-1.0, abs=1e-12)
    assert math.isnan(omega_job.oracle_slope(table[:1]))
    gaps = omega_job.median_log_gaps(table)
    assert gaps == {25: pytest.approx(0.0, abs=1e-12), 50: pytest.approx(0.0, abs=1e-12), 100: pytest.approx(0.0, abs=1e-12)}


def test_omega_points_csv_lists_calibrated_and_oracle_points() -> None:
    lines = omega_job.omega_points_csv(_synthetic_rows()[:1]).splitlines()

    assert lines[0] == "scenario,n,kind,omega"
    assert lines[1:] == [
        "1,25,calibrated,0.08",
        "1,25,calibrated,0.16",
        "1,25,calibrated,0.32",
        "1,25,oracle,0.16",
    ]


def test_omega_run_persists_expanded_rows() -> None:
    store = _Store()
    result = omega_job.run(
        scenario=ScenarioId.EX1,
        n_grid=(10,),
        replications=2,
        mc_reps=600,
        workers=1,
        store=store,
    )

    assert result["kind"] == "omega_study"
    assert result["oracle_slope"] is None
    assert result["rows_written"] == 2
    assert [row["replication"] for row in store.omega_rows] == [0, 1]
    assert store.history[-1]["status"] == "success"


@pytest.mark.parametrize("raw", ["10,x", "1,20"])
def test_parse_n_grid_rejects_bad_values(raw: str) -> None:
    with pytest.raises(InputError):
        parse_n_grid(raw)


def test_parse_prior_and_pair() -> None:
    assert parse_prior("flat") == Prior.flat()
    assert parse_prior("truncnorm:0.75,0.81") == Prior.truncated_normal(0.75, 0.81)
    assert parse_pair("2,4", "init") == (2.0, 4.0)
    with pytest.raises(InputError, match="prior must be"):
        parse_prior("beta:1,1")
    with pytest.raises(InputError, match="init must look like"):
        parse_pair("2", "init")
