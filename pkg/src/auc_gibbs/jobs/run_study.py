from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Sequence

import numpy as np

from auc_gibbs.config import DEBUG_RANK_CHECKS, DEFAULT_ALPHA, DEFAULT_N_GRID, DEFAULT_SEED, WORKERS
from auc_gibbs.errors import InputError
from auc_gibbs.inference.brl import brl_run, summarize_draws
from auc_gibbs.inference.calibrate import calibrate
from auc_gibbs.inference.gibbs import build_posterior, hpd_interval, posterior_moments
from auc_gibbs.jobs.common import (
    build_store,
    finish_run,
    log,
    parse_n_grid,
    replication_stream,
    scale_preset,
    start_run,
)
from auc_gibbs.models import (
    BrlConfig,
    CalibrationConfig,
    Prior,
    ScenarioId,
    StudyResult,
    study_result_rows,
)
from auc_gibbs.sources.scenarios import generate, parse_scenario, true_auc
from auc_gibbs.storage.lancedb_store import LanceDBStore

METHODS = ("gibbs", "brl")


@dataclass(frozen=True)
class ReplicationOutcome:
    posterior_mean: float
    posterior_sd: float
    lower: float
    upper: float


def run_replication(
    rep: int,
    *,
    scenario: ScenarioId,
    n: int,
    method: str,
    cfg: CalibrationConfig | BrlConfig,
    seed: int,
    alpha: float = DEFAULT_ALPHA,
    prior: Prior | None = None,
    check_ranks: bool = False,
) -> ReplicationOutcome:
    stream = replication_stream(seed, scenario, n, rep)
    data = generate(scenario, n, n, stream.substream(0))
    if method == "gibbs":
        assert isinstance(cfg, CalibrationConfig)
        chosen = prior or Prior.flat()
        trace = calibrate(data, chosen, cfg, rng=stream.substream(1))
        posterior = build_posterior(data, chosen, trace.omega_hat)
        mean, variance = posterior_moments(posterior)
        interval = hpd_interval(posterior, alpha)
        return ReplicationOutcome(mean, float(np.sqrt(variance)), interval.lower, interval.upper)
    assert isinstance(cfg, BrlConfig)
    draws = brl_run(data, cfg, stream.substream(2), check_ranks=check_ranks)
    mean, sd, interval = summarize_draws(draws, 1.0 - alpha)
    return ReplicationOutcome(mean, sd, interval.lower, interval.upper)


def summarize_cell(
    outcomes: Sequence[ReplicationOutcome],
    *,
    scenario: ScenarioId,
    n: int,
    method: str,
    seed: int,
    per_rep_bias: bool = False,
) -> StudyResult:
    theta_star = true_auc(scenario)
    means = np.array([o.posterior_mean for o in outcomes])
    sds = np.array([o.posterior_sd for o in outcomes])
    lengths = np.array([o.upper - o.lower for o in outcomes])
    covered = sum(1 for o in outcomes if o.lower <= theta_star <= o.upper)
    reps = len(outcomes)
    return StudyResult(
        scenario=int(scenario),
        n=n,
        method=method,
        bias=float(abs(means.mean() - theta_star)),
        per_rep_abs_bias=float(np.abs(means - theta_star).mean()) if per_rep_bias else None,
        avg_posterior_sd=float(sds.mean()),
        mean_ci_length=float(lengths.mean()),
        coverage=covered / reps,
        covered=covered,
        replications=reps,
        seed=seed,
    )


def run_study(
    scenario: ScenarioId,
    n_grid: Sequence[int],
    method: str,
    replications: int,
    cfg: CalibrationConfig | BrlConfig,
    seed: int = DEFAULT_SEED,
    *,
    alpha: float = DEFAULT_ALPHA,
    prior: Prior | None = None,
    workers: int = 1,
    check_ranks: bool = False,
    per_rep_bias: bool = False,
) -> list[StudyResult]:
    if method not in METHODS:
        raise InputError(f"method must be one of {', '.join(METHODS)}, got {method!r}")
    if replications < 0:
        raise InputError(f"replications must be >= 0, got {replications}")
    if replications == 0:
        return []

    results: list[StudyResult] = []
    for n in n_grid:
        log(
            "run_study",
            f"scenario={int(scenario)} n={n} method={method} reps={replications} workers={workers}",
        )
        task = partial(
            run_replication,
            scenario=scenario,
            n=n,
            method=method,
            cfg=cfg,
            seed=seed,
            alpha=alpha,
            prior=prior,
            check_ranks=check_ranks,
        )
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(task, range(replications), chunksize=8))
        else:
            outcomes = [task(rep) for rep in range(replications)]
        result = summarize_cell(
            outcomes, scenario=scenario, n=n, method=method, seed=seed, per_rep_bias=per_rep_bias
        )
        log(
            "run_study",
            f"cell done n={n} bias={result.bias:.4f} sd={result.avg_posterior_sd:.4f} "
            f"length={result.mean_ci_length:.4f} coverage={result.coverage:.3f}",
        )
        results.append(result)
    return results


def study_config(method: str, *, full: bool, seed: int, alpha: float) -> CalibrationConfig | BrlConfig:
    preset = scale_preset(full)
    if method == "gibbs":
        return CalibrationConfig(B=preset.bootstrap, alpha=alpha, seed=seed)
    return BrlConfig(
        n_samples=preset.brl_samples, burn_in=preset.brl_burn_in, scan="checkerboard"
    )


def run(
    *,
    scenario: ScenarioId,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    method: str = "gibbs",
    replications: int | None = None,
    full: bool = False,
    seed: int = DEFAULT_SEED,
    alpha: float = DEFAULT_ALPHA,
    workers: int = WORKERS,
    persist: bool = True,
    store: LanceDBStore | None = None,
    run_id: str | None = None,
    per_rep_bias: bool = False,
) -> dict[str, Any]:
    reps = scale_preset(full).replications if replications is None else replications
    cfg = study_config(method, full=full, seed=seed, alpha=alpha)

    if not persist:
        results = run_study(
            scenario, n_grid, method, reps, cfg, seed,
            alpha=alpha, workers=workers, check_ranks=DEBUG_RANK_CHECKS, per_rep_bias=per_rep_bias,
        )
        return {
            "kind": "study",
            "results": [r.to_dict() for r in results],
            "rows_written": 0,
            "per_rep_bias": per_rep_bias,
        }

    store = store or build_store()
    run_ctx = start_run("run_study", run_id=run_id)
    try:
        results = run_study(
            scenario, n_grid, method, reps, cfg, seed,
            alpha=alpha, workers=workers, check_ranks=DEBUG_RANK_CHECKS, per_rep_bias=per_rep_bias,
        )
        written = store.replace_study_results(study_result_rows(results, run_ctx.run_id))
    except Exception as exc:
        log("run_study", f"error: {exc}")
        finish_run(store, run_ctx, status="failed", rows_written=0, error_summary=str(exc))
        raise
    finish_run(store, run_ctx, status="success", rows_written=written["inserted"])
    return {
        "kind": "study",
        "results": [r.to_dict() for r in results],
        "rows_written": written["inserted"],
        "per_rep_bias": per_rep_bias,
    }


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, help="Scenario 1..4")
    parser.add_argument(
        "--n-grid",
        default=",".join(str(n) for n in DEFAULT_N_GRID),
        help="Comma-separated m=n sizes",
    )
    parser.add_argument("--reps", type=int, default=None, help="Replications per cell")
    parser.add_argument("--method", choices=METHODS, default="gibbs")
    parser.add_argument("--full", action="store_true", help="Use full-scale defaults")
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=WORKERS)
    parser.add_argument("--no-store", action="store_true", help="Skip the results store")
    parser.add_argument("--run-id", default=None, help="Optional run id")
    parser.add_argument(
        "--per-rep-bias",
        action="store_true",
        help="Also report the mean of per-replication absolute biases",
    )


def run_from_args(args: argparse.Namespace) -> dict[str, Any]:
    return run(
        scenario=parse_scenario(args.scenario),
        n_grid=parse_n_grid(args.n_grid),
        method=args.method,
        replications=args.reps,
        full=args.full,
        seed=args.seed,
        alpha=args.alpha,
        workers=max(1, args.workers),
        persist=not args.no_store,
        run_id=args.run_id,
        per_rep_bias=bool(args.per_rep_bias),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description="Run a simulation study over an n-grid")
    add_arguments(parser)
    args = parser.parse_args()

    result = run_from_args(args)
    json.dump(result, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    log(
        "run_study",
        f"run_study complete: cells={len(result['results'])} rows_written={result['rows_written']}",
    )


if __name__ == "__main__":
    main()
