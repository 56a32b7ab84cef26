from __future__ import annotations

import argparse
import json
import math
import sys
from collections import defaultdict
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from auc_gibbs.errors import InputError
from auc_gibbs.jobs.common import build_store, log
from auc_gibbs.models import ScenarioId
from auc_gibbs.sources.scenarios import true_auc
from auc_gibbs.storage.lancedb_store import LanceDBStore


def render_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _fmt(value: Any, digits: int = 3) -> str:
    if value is None:
        return "-"
    number = float(value)
    if not math.isfinite(number):
        return "-"
    return f"{number:.{digits}f}"


def format_study_tables(results: Sequence[dict[str, Any]], *, per_rep_bias: bool = False) -> str:
    """One block per scenario: n, method, bias, SD, mean length, coverage."""
    by_scenario: dict[int, list[dict[str, Any]]] = defaultdict(list)
    for row in results:
        by_scenario[int(row["scenario"])].append(row)

    headers = ["n", "method", "bias"]
    if per_rep_bias:
        headers.append("abs bias/rep")
    headers += ["post. sd", "mean length", "coverage"]

    blocks: list[str] = []
    for scenario in sorted(by_scenario):
        cells = sorted(by_scenario[scenario], key=lambda r: (int(r["n"]), str(r["method"])))
        rows = []
        for cell in cells:
            row = [str(cell["n"]), str(cell["method"]), _fmt(cell["bias"])]
            if per_rep_bias:
                row.append(_fmt(cell.get("per_rep_abs_bias")))
            row += [
                _fmt(cell["avg_posterior_sd"]),
                _fmt(cell["mean_ci_length"]),
                _fmt(cell["coverage"]),
            ]
            rows.append(row)
        theta_star = true_auc(ScenarioId(scenario))
        title = f"Example {scenario} (theta* = {theta_star:.4f}, reps = {cells[0]['replications']})"
        blocks.append(title + "\n" + render_table(headers, rows))
    return "\n\n".join(blocks)


def format_omega_table(rows: Sequence[dict[str, Any]]) -> str:
    """Per (scenario, n): median and quartiles of calibrated omega, oracle omega."""
    grouped: dict[tuple[int, int], dict[str, Any]] = {}
    for row in rows:
        key = (int(row["scenario"]), int(row["n"]))
        entry = grouped.setdefault(key, {"omegas": [], "oracle": row["omega_oracle"], "converged": 0})
        # stored rows carry one estimate each; job payloads carry the full list
        if "omega_hats" in row:
            entry["omegas"].extend(float(x) for x in row["omega_hats"])
            entry["converged"] += sum(1 for flag in row["converged"] if flag)
        else:
            entry["omegas"].append(float(row["omega_hat"]))
            entry["converged"] += 1 if row["converged"] else 0

    table_rows = []
    for (scenario, n), entry in sorted(grouped.items()):
        omegas = np.asarray(entry["omegas"], dtype=float)
        if omegas.size:
            q1, median, q3 = np.quantile(omegas, [0.25, 0.5, 0.75])
        else:
            q1 = median = q3 = math.nan
        table_rows.append(
            [
                str(scenario),
                str(n),
                str(omegas.size),
                str(entry["converged"]),
                _fmt(q1, 5),
                _fmt(median, 5),
                _fmt(q3, 5),
                _fmt(entry["oracle"], 5),
            ]
        )
    headers = ["scenario", "n", "reps", "converged", "q25", "median", "q75", "oracle"]
    return render_table(headers, table_rows)


def format_analysis_table(reports: Sequence[dict[str, Any]]) -> str:
    rows = []
    for report in reports:
        ci = report["ci"]
        rows.append(
            [
                str(report["method"]),
                _fmt(report["posterior_mean"]),
                _fmt(report["posterior_sd"]),
                f"({_fmt(ci['lower'])}, {_fmt(ci['upper'])})",
                str(ci["kind"]),
                _fmt(report.get("learning_rate")),
            ]
        )
    headers = ["method", "mean", "sd", f"{ci_level(reports)} interval", "kind", "learning rate"]
    return render_table(headers, rows)


def ci_level(reports: Sequence[dict[str, Any]]) -> str:
    levels = {float(report["ci"]["level"]) for report in reports}
    if len(levels) == 1:
        return f"{100 * levels.pop():g}%"
    return "credible"


def render_payload(payload: dict[str, Any], *, per_rep_bias: bool | None = None) -> str:
    kind = payload.get("kind")
    if kind == "study":
        flag = payload.get("per_rep_bias", False) if per_rep_bias is None else per_rep_bias
        return format_study_tables(payload["results"], per_rep_bias=bool(flag))
    if kind == "omega_study":
        return format_omega_table(payload["rows"])
    if kind == "analysis":
        return format_analysis_table(payload["reports"])
    if "method" in payload and "ci" in payload:
        return format_analysis_table([payload])
    raise InputError("unrecognised report payload: expected a study, omega_study or analysis JSON")


def render_store(store: LanceDBStore, *, per_rep_bias: bool = False) -> str:
    blocks: list[str] = []
    study_rows = store.read_table("study_results")
    if study_rows:
        blocks.append(format_study_tables(study_rows, per_rep_bias=per_rep_bias))
    omega_rows = store.read_table("omega_study")
    if omega_rows:
        blocks.append(format_omega_table(omega_rows))
    if not blocks:
        return "results store is empty"
    return "\n\n".join(blocks)


def run(
    *,
    input_path: str | Path | None = None,
    from_store: bool = False,
    per_rep_bias: bool | None = None,
    store: LanceDBStore | None = None,
) -> dict[str, Any]:
    if input_path is not None:
        path = Path(input_path)
        if not path.exists():
            raise FileNotFoundError(f"Report input not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON: {exc}") from exc
        return {"text": render_payload(payload, per_rep_bias=per_rep_bias)}
    if from_store:
        store = store or build_store()
        return {"text": render_store(store, per_rep_bias=bool(per_rep_bias))}
    raise InputError("report needs a JSON file or --from-store")


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", nargs="?", default=None, help="JSON written by another subcommand")
    parser.add_argument("--from-store", action="store_true", help="Render the stored tables")
    parser.add_argument("--per-rep-bias", action="store_true", default=None)


def run_from_args(args: argparse.Namespace) -> dict[str, Any]:
    return run(
        input_path=args.input,
        from_store=args.from_store,
        per_rep_bias=args.per_rep_bias,
    )


def main() -> None:
    parser = argparse.ArgumentParser(description="Render result JSON as aligned text tables")
    add_arguments(parser)
    args = parser.parse_args()

    result = run_from_args(args)
    sys.stdout.write(result["text"] + "\n")
    log("report", "report complete")


if __name__ == "__main__":
    main()
