"""Posterior summaries of a score file: two Gibbs posteriors and two BRL chains."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence

from auc_gibbs.config import (
    BRL_REAL_DATA_INITS,
    DEFAULT_ALPHA,
    DEFAULT_SEED,
    DESK_BOOTSTRAP,
    GIBBS2_PRIOR_LOCATION,
    GIBBS2_PRIOR_SCALE,
    REAL_DATA_BRL_BURN_IN,
    REAL_DATA_BRL_SAMPLES,
)
from auc_gibbs.errors import InputError
from auc_gibbs.inference.auc_core import mann_whitney
from auc_gibbs.inference.brl import brl_run, summarize_draws
from auc_gibbs.inference.calibrate import calibrate
from auc_gibbs.inference.gibbs import (
    analytic_learning_rate,
    build_posterior,
    hpd_interval,
    posterior_moments,
)
from auc_gibbs.inference.stats_core import RngStream
from auc_gibbs.jobs.common import log
from auc_gibbs.models import (
    BrlConfig,
    CalibrationConfig,
    CalibrationTrace,
    Prior,
    ScoreData,
)
from auc_gibbs.sources.score_files import read_score_file, require_tie_free

METHOD_VARIANTS = ("gibbs1", "gibbs2", "brl1", "brl2")
OMEGA_MODES = ("calibrate", "analytic")


def parse_omega_mode(raw: str) -> str | float:
    text = raw.strip().lower()
    if text in OMEGA_MODES:
        return text
    try:
        value = float(text)
    except ValueError as exc:
        raise InputError(f"--omega must be a number, 'analytic' or 'calibrate', got {raw!r}") from exc
    if not value > 0.0 or not math.isfinite(value):
        raise InputError(f"learning rate must be > 0, got {raw!r}")
    return value


def calibration_report(trace: CalibrationTrace, cfg: CalibrationConfig) -> dict[str, Any]:
    return {
        "omega_hat": trace.omega_hat,
        "converged": trace.converged,
        "iterations": len(trace.iterates),
        "trace": [asdict(iterate) for iterate in trace.iterates],
        "config_echo": cfg.to_dict(),
    }


def fit_gibbs(
    data: ScoreData,
    prior: Prior,
    omega: str | float = "calibrate",
    *,
    alpha: float = DEFAULT_ALPHA,
    seed: int = DEFAULT_SEED,
    cal_cfg: CalibrationConfig | None = None,
    method: str = "gibbs",
) -> dict[str, Any]:
    echo: dict[str, Any] = {"prior": prior.describe(), "alpha": alpha, "m": data.m, "n": data.n}
    if omega == "calibrate":
        cfg = cal_cfg or CalibrationConfig(alpha=alpha, seed=seed)
        trace = calibrate(data, prior, cfg)
        learning_rate = trace.omega_hat
        echo["omega"] = "calibrate"
        echo["calibration"] = cfg.to_dict()
        echo["converged"] = trace.converged
        echo["iterations"] = len(trace.iterates)
    elif omega == "analytic":
        learning_rate = analytic_learning_rate(data)
        echo["omega"] = "analytic"
    else:
        learning_rate = float(omega)
        echo["omega"] = learning_rate

    posterior = build_posterior(data, prior, learning_rate)
    mean, variance = posterior_moments(posterior)
    interval = hpd_interval(posterior, alpha)
    echo["theta_hat"] = mann_whitney(data)
    return {
        "method": method,
        "posterior_mean": mean,
        "posterior_sd": math.sqrt(variance),
        "ci": interval.to_dict(),
        "learning_rate": learning_rate,
        "seed": seed,
        "config_echo": echo,
    }


def fit_brl(
    data: ScoreData,
    cfg: BrlConfig,
    *,
    alpha: float = DEFAULT_ALPHA,
    seed: int = DEFAULT_SEED,
    stream_id: int = 1,
    method: str = "brl",
) -> dict[str, Any]:
    require_tie_free(data)
    draws = brl_run(data, cfg, RngStream(seed, stream_id))
    mean, sd, interval = summarize_draws(draws, 1.0 - alpha)
    echo = cfg.to_dict()
    echo.update({"alpha": alpha, "m": data.m, "n": data.n, "stream_id": stream_id})
    return {
        "method": method,
        "posterior_mean": mean,
        "posterior_sd": sd,
        "ci": interval.to_dict(),
        "seed": seed,
        "config_echo": echo,
    }


def analyze_file(
    path: str | Path,
    *,
    methods: Sequence[str] = METHOD_VARIANTS,
    alpha: float = DEFAULT_ALPHA,
    seed: int = DEFAULT_SEED,
    bootstrap: int = DESK_BOOTSTRAP,
    brl_samples: int = REAL_DATA_BRL_SAMPLES,
    brl_burn_in: int = REAL_DATA_BRL_BURN_IN,
    scan: str = "checkerboard",
) -> list[dict[str, Any]]:
    unknown = [name for name in methods if name not in METHOD_VARIANTS]
    if unknown:
        raise InputError(f"unknown method variant(s): {', '.join(unknown)}")
    data = read_score_file(path)
    if any(name.startswith("brl") for name in methods):
        require_tie_free(data)
    log("analyze_file", f"path={path} m={data.m} n={data.n} methods={','.join(methods)}")

    cal_cfg = CalibrationConfig(B=bootstrap, alpha=alpha, seed=seed)
    reports: list[dict[str, Any]] = []
    for name in methods:
        log("analyze_file", f"fitting {name}")
        if name == "gibbs1":
            reports.append(
                fit_gibbs(data, Prior.flat(), alpha=alpha, seed=seed, cal_cfg=cal_cfg, method=name)
            )
        elif name == "gibbs2":
            prior = Prior.truncated_normal(GIBBS2_PRIOR_LOCATION, GIBBS2_PRIOR_SCALE)
            reports.append(
                fit_gibbs(data, prior, alpha=alpha, seed=seed, cal_cfg=cal_cfg, method=name)
            )
        else:
            index = int(name[-1])
            cfg = BrlConfig(
                n_samples=brl_samples,
                burn_in=brl_burn_in,
                init=BRL_REAL_DATA_INITS[index - 1],
                scan=scan,
            )
            reports.append(
                fit_brl(data, cfg, alpha=alpha, seed=seed, stream_id=index, method=name)
            )
    return reports


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def round_floats(value: Any, digits: int) -> Any:
    """Round every float in a JSON-like payload to ``digits`` significant digits."""
    if isinstance(value, bool) or not isinstance(value, (float, dict, list, tuple)):
        return value
    if isinstance(value, float):
        return float(f"{value:.{digits}g}") if math.isfinite(value) else value
    if isinstance(value, dict):
        return {key: round_floats(item, digits) for key, item in value.items()}
    return [round_floats(item, digits) for item in value]


def run(
    *,
    path: str | Path,
    methods: Sequence[str] = METHOD_VARIANTS,
    alpha: float = DEFAULT_ALPHA,
    seed: int = DEFAULT_SEED,
    bootstrap: int = DESK_BOOTSTRAP,
    brl_samples: int = REAL_DATA_BRL_SAMPLES,
    brl_burn_in: int = REAL_DATA_BRL_BURN_IN,
) -> dict[str, Any]:
    reports = analyze_file(
        path,
        methods=methods,
        alpha=alpha,
        seed=seed,
        bootstrap=bootstrap,
        brl_samples=brl_samples,
        brl_burn_in=brl_burn_in,
    )
    return {"kind": "analysis", "source": Path(path).name, "reports": reports}


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", help="CSV with header score,group")
    parser.add_argument(
        "--methods",
        default=",".join(METHOD_VARIANTS),
        help="Comma-separated subset of gibbs1,gibbs2,brl1,brl2",
    )
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--B", dest="bootstrap", type=int, default=DESK_BOOTSTRAP)
    parser.add_argument("--samples", type=int, default=REAL_DATA_BRL_SAMPLES)
    parser.add_argument("--burnin", type=int, default=REAL_DATA_BRL_BURN_IN)


def run_from_args(args: argparse.Namespace) -> dict[str, Any]:
    methods = tuple(part.strip() for part in args.methods.split(",") if part.strip())
    return run(
        path=args.file,
        methods=methods,
        alpha=args.alpha,
        seed=args.seed,
        bootstrap=args.bootstrap,
        brl_samples=args.samples,
        brl_burn_in=args.burnin,
    )


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Gibbs posteriors and BRL chains for one score file"
    )
    add_arguments(parser)
    args = parser.parse_args()

    result = run_from_args(args)
    sys.stdout.write(render_json(result))
    log("analyze_file", f"analyze_file complete: methods={len(result['reports'])}")


if __name__ == "__main__":
    main()
