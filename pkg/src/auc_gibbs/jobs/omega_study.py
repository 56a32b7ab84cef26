from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Sequence

import numpy as np

from auc_gibbs.config import (
    DEFAULT_ALPHA,
    DEFAULT_N_GRID,
    DEFAULT_SEED,
    ORACLE_MC_REPS,
    WORKERS,
)
from auc_gibbs.inference.calibrate import calibrate, oracle_learning_rate
from auc_gibbs.jobs.common import (
    build_store,
    finish_run,
    log,
    oracle_stream,
    parse_n_grid,
    replication_stream,
    scale_preset,
    start_run,
)
from auc_gibbs.models import (
    CalibrationConfig,
    OmegaStudyRow,
    Prior,
    ScenarioId,
    omega_study_rows,
)
from auc_gibbs.sources.scenarios import generate, parse_scenario
from auc_gibbs.storage.lancedb_store import LanceDBStore


def calibrate_replication(
    rep: int, *, scenario: ScenarioId, n: int, cfg: CalibrationConfig, seed: int
) -> tuple[float, bool]:
    stream = replication_stream(seed, scenario, n, rep)
    data = generate(scenario, n, n, stream.substream(0))
    trace = calibrate(data, Prior.flat(), cfg, rng=stream.substream(1))
    return trace.omega_hat, trace.converged


def omega_study(
    scenario: ScenarioId,
    n_grid: Sequence[int],
    replications: int,
    cfg: CalibrationConfig,
    seed: int = DEFAULT_SEED,
    *,
    mc_reps: int = ORACLE_MC_REPS,
    workers: int = 1,
) -> list[OmegaStudyRow]:
    """Calibrated learning rates per replication next to the oracle rate, per n."""
    table: list[OmegaStudyRow] = []
    for n in n_grid:
        log("omega_study", f"scenario={int(scenario)} n={n} reps={replications} mc_reps={mc_reps}")
        task = partial(calibrate_replication, scenario=scenario, n=n, cfg=cfg, seed=seed)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                fits = list(pool.map(task, range(replications), chunksize=8))
        else:
            fits = [task(rep) for rep in range(replications)]
        oracle = oracle_learning_rate(
            scenario, n, n, cfg.alpha, mc_reps, oracle_stream(seed, scenario, n)
        )
        table.append(
            OmegaStudyRow(
                scenario=int(scenario),
                n=n,
                omega_hats=[omega for omega, _ in fits],
                converged=[converged for _, converged in fits],
                omega_oracle=oracle,
                seed=seed,
            )
        )
        log("omega_study", f"n={n} oracle={oracle:.6g}")
    return table


def oracle_slope(table: Sequence[OmegaStudyRow]) -> float:
    """Least-squares slope of log(oracle omega) on log n."""
    if len(table) < 2:
        return math.nan
    log_n = np.log([row.n for row in table])
    log_oracle = np.log([row.omega_oracle for row in table])
    return float(np.polyfit(log_n, log_oracle, 1)[0])


def median_log_gaps(table: Sequence[OmegaStudyRow]) -> dict[int, float]:
    """Per n, median log(omega_hat) minus log(oracle omega)."""
    gaps: dict[int, float] = {}
    for row in table:
        if not row.omega_hats:
            continue
        gaps[row.n] = float(np.median(np.log(row.omega_hats)) - math.log(row.omega_oracle))
    return gaps


def omega_points_csv(table: Sequence[OmegaStudyRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["scenario", "n", "kind", "omega"])
    for row in table:
        for omega in row.omega_hats:
            writer.writerow([row.scenario, row.n, "calibrated", repr(float(omega))])
        writer.writerow([row.scenario, row.n, "oracle", repr(float(row.omega_oracle))])
    return buffer.getvalue()


def run(
    *,
    scenario: ScenarioId,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    replications: int | None = None,
    full: bool = False,
    seed: int = DEFAULT_SEED,
    alpha: float = DEFAULT_ALPHA,
    mc_reps: int = ORACLE_MC_REPS,
    workers: int = WORKERS,
    persist: bool = True,
    store: LanceDBStore | None = None,
    run_id: str | None = None,
) -> dict[str, Any]:
    preset = scale_preset(full)
    reps = preset.replications if replications is None else replications
    cfg = CalibrationConfig(B=preset.bootstrap, alpha=alpha, seed=seed)

    def _payload(table: list[OmegaStudyRow], written: int) -> dict[str, Any]:
        slope = oracle_slope(table)
        return {
            "kind": "omega_study",
            "rows": [row.to_dict() for row in table],
            "oracle_slope": slope if math.isfinite(slope) else None,
            "median_log_gaps": {str(n): gap for n, gap in median_log_gaps(table).items()},
            "rows_written": written,
        }

    if not persist:
        table = omega_study(scenario, n_grid, reps, cfg, seed, mc_reps=mc_reps, workers=workers)
        return _payload(table, 0)

    store = store or build_store()
    run_ctx = start_run("omega_study", run_id=run_id)
    try:
        table = omega_study(scenario, n_grid, reps, cfg, seed, mc_reps=mc_reps, workers=workers)
        written = store.replace_omega_rows(omega_study_rows(table, run_ctx.run_id))
    except Exception as exc:
        log("omega_study", f"error: {exc}")
        finish_run(store, run_ctx, status="failed", rows_written=0, error_summary=str(exc))
        raise
    finish_run(store, run_ctx, status="success", rows_written=written["inserted"])
    return _payload(table, written["inserted"])


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, help="Scenario 1..4")
    parser.add_argument(
        "--n-grid",
        default=",".join(str(n) for n in DEFAULT_N_GRID),
        help="Comma-separated m=n sizes",
    )
    parser.add_argument("--reps", type=int, default=None, help="Calibrations per n")
    parser.add_argument("--full", action="store_true", help="Use full-scale defaults")
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    parser.add_argument("--mc-reps", type=int, default=ORACLE_MC_REPS)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=WORKERS)
    parser.add_argument("--csv", default=None, help="Also write (n, omega) points to this CSV")
    parser.add_argument("--no-store", action="store_true", help="Skip the results store")
    parser.add_argument("--run-id", default=None, help="Optional run id")


def run_from_args(args: argparse.Namespace) -> dict[str, Any]:
    result = run(
        scenario=parse_scenario(args.scenario),
        n_grid=parse_n_grid(args.n_grid),
        replications=args.reps,
        full=args.full,
        seed=args.seed,
        alpha=args.alpha,
        mc_reps=args.mc_reps,
        workers=max(1, args.workers),
        persist=not args.no_store,
        run_id=args.run_id,
    )
    if args.csv:
        table = [OmegaStudyRow(**row) for row in result["rows"]]
        with open(args.csv, "w", encoding="utf-8", newline="") as handle:
            handle.write(omega_points_csv(table))
        log("omega_study", f"points written to {args.csv}")
    return result


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Compare calibrated learning rates with the oracle rate over an n-grid"
    )
    add_arguments(parser)
    args = parser.parse_args()

    result = run_from_args(args)
    json.dump(result, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    log(
        "omega_study",
        f"omega_study complete: cells={len(result['rows'])} rows_written={result['rows_written']}",
    )


if __name__ == "__main__":
    main()
