"""``auc-gibbs`` command line: one subcommand per workflow.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any, Callable, Sequence

from auc_gibbs.config import (
    CALIBRATION_EPSILON,
    CALIBRATION_KAPPA_EXPONENT,
    CALIBRATION_MAX_ITERATIONS,
    DEFAULT_ALPHA,
    DEFAULT_SEED,
    DESK_BOOTSTRAP,
    DESK_BRL_BURN_IN,
    DESK_BRL_SAMPLES,
)
from auc_gibbs.errors import InputError, NumericalError
from auc_gibbs.inference.calibrate import calibrate
from auc_gibbs.inference.gibbs import analytic_learning_rate
from auc_gibbs.jobs import analyze_file, fetch_ca125, omega_study, report, run_study
from auc_gibbs.jobs.analyze_file import (
    calibration_report,
    fit_brl,
    fit_gibbs,
    parse_omega_mode,
    render_json,
    round_floats,
)
from auc_gibbs.jobs.common import log, parse_pair, parse_prior
from auc_gibbs.models import BrlConfig, CalibrationConfig
from auc_gibbs.sources.score_files import read_score_file

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _fit(args: argparse.Namespace) -> dict[str, Any]:
    data = read_score_file(args.file)
    cal_cfg = CalibrationConfig(B=args.bootstrap, alpha=args.alpha, seed=args.seed)
    result = fit_gibbs(
        data,
        parse_prior(args.prior),
        parse_omega_mode(args.omega),
        alpha=args.alpha,
        seed=args.seed,
        cal_cfg=cal_cfg,
    )
    if args.digits is not None:
        if args.digits < 1:
            raise InputError(f"--digits must be >= 1, got {args.digits}")
        result = round_floats(result, args.digits)
    return result


def _calibrate(args: argparse.Namespace) -> dict[str, Any]:
    data = read_score_file(args.file)
    omega_init: float | str = args.omega_init.strip().lower()
    if omega_init == "analytic":
        omega_init = analytic_learning_rate(data)
    elif omega_init != "auto":
        mode = parse_omega_mode(omega_init)
        if isinstance(mode, str):
            raise InputError(
                f"--omega-init must be auto, analytic or a number, got {args.omega_init!r}"
            )
        omega_init = mode
    cfg = CalibrationConfig(
        B=args.bootstrap,
        alpha=args.alpha,
        epsilon=args.epsilon,
        kappa_exponent=args.kappa_exp,
        omega_init=omega_init,
        max_iterations=args.max_iter,
        seed=args.seed,
    )
    trace = calibrate(data, parse_prior(args.prior), cfg)
    payload = calibration_report(trace, cfg)
    payload["prior"] = args.prior
    return payload


def _brl(args: argparse.Namespace) -> dict[str, Any]:
    data = read_score_file(args.file)
    init = parse_pair(args.init, "--init") if args.init else None
    cfg = BrlConfig(
        n_samples=args.samples,
        burn_in=args.burnin,
        thin=args.thin,
        init=init,
        scan=args.scan,
    )
    return fit_brl(data, cfg, alpha=args.alpha, seed=args.seed)


def _add_file_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", help="CSV with header score,group")
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auc-gibbs",
        description="Gibbs posterior inference for the AUC, with a rank-likelihood baseline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Gibbs posterior for one score file")
    _add_file_arguments(fit)
    fit.add_argument("--prior", default="flat", help="flat | truncnorm:LOC,SCALE")
    fit.add_argument("--omega", default="calibrate", help="VALUE | analytic | calibrate")
    fit.add_argument("--B", dest="bootstrap", type=int, default=DESK_BOOTSTRAP)
    fit.add_argument(
        "--digits", type=int, default=None, help="Round floats to this many significant digits"
    )
    fit.set_defaults(handler=_fit, render="json")

    cal = sub.add_parser("calibrate", help="Bootstrap learning-rate calibration trace")
    _add_file_arguments(cal)
    cal.add_argument("--prior", default="flat", help="flat | truncnorm:LOC,SCALE")
    cal.add_argument("--B", dest="bootstrap", type=int, default=DESK_BOOTSTRAP)
    cal.add_argument("--epsilon", type=float, default=CALIBRATION_EPSILON)
    cal.add_argument("--kappa-exp", type=float, default=CALIBRATION_KAPPA_EXPONENT)
    cal.add_argument("--max-iter", type=int, default=CALIBRATION_MAX_ITERATIONS)
    cal.add_argument("--omega-init", default="auto", help="auto | analytic | VALUE")
    cal.set_defaults(handler=_calibrate, render="json")

    brl = sub.add_parser("brl", help="Bayes rank-likelihood chain summary")
    _add_file_arguments(brl)
    brl.add_argument("--samples", type=int, default=DESK_BRL_SAMPLES)
    brl.add_argument("--burnin", type=int, default=DESK_BRL_BURN_IN)
    brl.add_argument("--thin", type=int, default=1)
    brl.add_argument("--init", default=None, help="a,b2 (default: normal scores)")
    brl.add_argument("--scan", choices=("systematic", "checkerboard"), default="systematic")
    brl.set_defaults(handler=_brl, render="json")

    simulate = sub.add_parser("simulate", help="Simulation study for one scenario")
    run_study.add_arguments(simulate)
    simulate.set_defaults(handler=run_study.run_from_args, render="json")

    omega = sub.add_parser("omega-study", help="Calibrated vs oracle learning rates")
    omega_study.add_arguments(omega)
    omega.set_defaults(handler=omega_study.run_from_args, render="json")

    analyze = sub.add_parser("analyze", help="Gibbs1/Gibbs2/BRL1/BRL2 on one score file")
    analyze_file.add_arguments(analyze)
    analyze.set_defaults(handler=analyze_file.run_from_args, render="json")

    rep = sub.add_parser("report", help="Render result JSON or the store as text tables")
    report.add_arguments(rep)
    rep.set_defaults(handler=report.run_from_args, render="text")

    fetch = sub.add_parser("fetch-ca125", help="Download the CA-125 data set")
    fetch_ca125.add_arguments(fetch)
    fetch.set_defaults(handler=fetch_ca125.run_from_args, render="json")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[argparse.Namespace], dict[str, Any]] = args.handler
    try:
        result = handler(args)
    except (InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if args.render == "text":
        sys.stdout.write(result["text"] + "\n")
    else:
        sys.stdout.write(render_json(result))
    log(args.command, f"{args.command} complete")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
