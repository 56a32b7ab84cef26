from __future__ import annotations

import argparse
from pathlib import Path
from typing import Any

from auc_gibbs.config import CA125_PATH, CA125_URL
from auc_gibbs.jobs.common import log
from auc_gibbs.sources.ca125_client import Ca125Client
from auc_gibbs.sources.score_files import write_score_file


def run(*, url: str = CA125_URL, dest: str | Path = CA125_PATH) -> dict[str, Any]:
    log("fetch_ca125", f"downloading {url}")
    data = Ca125Client(url=url).fetch_scores()
    path = write_score_file(data, dest)
    ties = data.has_ties()
    if ties:
        log("fetch_ca125", "warning: scores contain ties; the BRL variants will refuse this file")
    return {"path": str(path), "m": data.m, "n": data.n, "ties": ties}


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--url", default=CA125_URL, help="Source CSV with columns y1,y2,d")
    parser.add_argument("--dest", default=str(CA125_PATH), help="Where to write score,group CSV")


def run_from_args(args: argparse.Namespace) -> dict[str, Any]:
    return run(url=args.url, dest=args.dest)


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Download the CA-125 biomarker data as a score,group CSV"
    )
    add_arguments(parser)
    args = parser.parse_args()

    result = run_from_args(args)
    log(
        "fetch_ca125",
        f"fetch_ca125 complete: path={result['path']} m={result['m']} n={result['n']} ties={result['ties']}",
    )


if __name__ == "__main__":
    main()
