from __future__ import annotations

import json

import pytest

from auc_gibbs.errors import InputError
from auc_gibbs.jobs import report as report_job
from auc_gibbs.jobs.report import (
    format_analysis_table,
    format_omega_table,
    format_study_tables,
    render_payload,
    render_table,
)


def _cell(n: int, method: str = "gibbs", scenario: int = 1) -> dict:
    return {
        "scenario": scenario,
        "n": n,
        "method": method,
        "bias": 0.0123,
        "per_rep_abs_bias": 0.04,
        "avg_posterior_sd": 0.051,
        "mean_ci_length": 0.2,
        "coverage": 0.95,
        "covered": 190,
        "replications": 200,
        "seed": 1,
    }


def test_render_table_right_aligns_columns() -> None:
    text = render_table(["n", "value"], [["5", "1.0"], ["125", "10.25"]])

    assert text.splitlines() == [
        "  n  value",
        "---  -----",
        "  5    1.0",
        "125  10.25",
    ]


def test_study_tables_group_by_scenario_and_sort_cells() -> None:
    text = format_study_tables([_cell(50), _cell(25, "brl"), _cell(25), _cell(25, scenario=4)])
    blocks = text.split("\n\n")

    assert blocks[0].startswith("Example 1 (theta* = 0.9214, reps = 200)")
    assert blocks[1].startswith("Example 4 (theta* = 0.7895, reps = 200)")
    body = blocks[0].splitlines()[3:]
    assert [line.split()[:2] for line in body] == [["25", "brl"], ["25", "gibbs"], ["50", "gibbs"]]
    assert body[0].split()[2:] == ["0.012", "0.051", "0.200", "0.950"]
    assert "abs bias/rep" not in text


def test_study_tables_optionally_show_per_rep_bias() -> None:
    text = format_study_tables([_cell(25)], per_rep_bias=True)
    header, _, row = text.splitlines()[1:4]

    assert "abs bias/rep" in header
    assert row.split()[3] == "0.040"

    unrequested = dict(_cell(25), per_rep_abs_bias=None)
    row = format_study_tables([unrequested], per_rep_bias=True).splitlines()[3]
    assert row.split()[3] == "-"


def test_omega_table_accepts_payload_and_stored_rows() -> None:
    payload_rows = [
        {"scenario": 1, "n": 25, "omega_hats": [0.1, 0.2, 0.3, 0.4, 0.5],
         "converged": [True, True, False, True, True], "omega_oracle": 0.25, "seed": 1}
    ]
    stored_rows = [
        {"scenario": 1, "n": 25, "replication": i, "omega_hat": w, "converged": c, "omega_oracle": 0.25}
        for i, (w, c) in enumerate(zip([0.1, 0.2, 0.3, 0.4, 0.5], [True, True, False, True, True]))
    ]

    expected_row = ["1", "25", "5", "4", "0.20000", "0.30000", "0.40000", "0.25000"]
    assert format_omega_table(payload_rows).splitlines()[2].split() == expected_row
    assert format_omega_table(stored_rows).splitlines()[2].split() == expected_row


def test_analysis_table_shows_level_and_missing_learning_rate() -> None:
    reports = [
        {"method": "gibbs1", "posterior_mean": 0.8, "posterior_sd": 0.05,
         "ci": {"lower": 0.7, "upper": 0.9, "level": 0.95, "kind": "HPD"}, "learning_rate": 3.5},
        {"method": "brl1", "posterior_mean": 0.81, "posterior_sd": 0.06,
         "ci": {"lower": 0.68, "upper": 0.91, "level": 0.95, "kind": "equal-tailed"}},
    ]
    lines = format_analysis_table(reports).splitlines()

    assert "95% interval" in lines[0]
    assert lines[2].split()[-1] == "3.500"
    assert lines[3].split()[-1] == "-"


def test_render_payload_rejects_unknown_kind() -> None:
    with pytest.raises(InputError, match="unrecognised report payload"):
        render_payload({"kind": "dashboard"})


def test_run_renders_json_file(tmp_path) -> None:
    path = tmp_path / "study.json"
    path.write_text(
        json.dumps({"kind": "study", "results": [_cell(25)], "rows_written": 1, "per_rep_bias": True}),
        encoding="utf-8",
    )

    assert "abs bias/rep" in report_job.run(input_path=path)["text"]
    assert "abs bias/rep" not in report_job.run(input_path=path, per_rep_bias=False)["text"]


def test_run_reports_bad_inputs(tmp_path) -> None:
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")

    with pytest.raises(InputError, match="not valid JSON"):
        report_job.run(input_path=broken)
    with pytest.raises(FileNotFoundError, match="Report input not found"):
        report_job.run(input_path=tmp_path / "missing.json")
    with pytest.raises(InputError, match="--from-store"):
        report_job.run()


def test_run_renders_store_tables() -> None:
    class _Store:
        def __init__(self, tables: dict[str, list[dict]]) -> None:
            self.tables = tables

        def read_table(self, table_name: str):
            return self.tables.get(table_name, [])

    empty = report_job.run(from_store=True, store=_Store({}))
    assert empty["text"] == "results store is empty"

    filled = report_job.run(from_store=True, store=_Store({"study_results": [_cell(25)]}))
    assert filled["text"].startswith("Example 1")
