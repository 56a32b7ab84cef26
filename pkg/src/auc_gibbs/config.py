from __future__ import annotations

import os
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[2]
FIXTURES_DIR = ROOT_DIR / "fixtures"
DATA_DIR = ROOT_DIR / "data"


def _unquote_env_value(value: str) -> str:
    stripped = value.strip()
    if len(stripped) >= 2 and stripped[0] == stripped[-1] and stripped[0] in {"'", '"'}:
        return stripped[1:-1]
    return stripped


def _load_env_file(path: Path) -> None:
    if not path.exists():
        return
    for raw_line in path.read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("export "):
            line = line[len("export ") :].strip()
        if "=" not in line:
            continue
        key, raw_value = line.split("=", 1)
        key = key.strip()
        if not key or key in os.environ:
            continue
        os.environ[key] = _unquote_env_value(raw_value)


_load_env_file(ROOT_DIR / ".env")

RESULTS_URI = (os.getenv("AUC_GIBBS_RESULTS_URI") or "").strip() or str(
    ROOT_DIR / "results" / "lancedb"
)
WORKERS = max(1, int(os.getenv("AUC_GIBBS_WORKERS", "1")))
DEFAULT_SEED = int(os.getenv("AUC_GIBBS_SEED", "20210501"))
DEBUG_RANK_CHECKS = os.getenv("AUC_GIBBS_DEBUG", "0") == "1"

# Wieand et al. (1989) pancreatic-cancer biomarkers, columns y1 (CA19-9), y2 (CA-125), d.
CA125_URL = (
    os.getenv("AUC_GIBBS_CA125_URL")
    or "https://research.fredhutch.org/content/dam/stripe/diagnostic-biomarkers-statistical-center/files/wiedat2b.csv"
).strip()
CA125_PATH = DATA_DIR / "ca125.csv"
REQUEST_TIMEOUT_SECONDS = int(os.getenv("AUC_GIBBS_TIMEOUT_SECONDS", "30"))

DEFAULT_N_GRID = (25, 50, 75, 100, 125)
DEFAULT_ALPHA = 0.05

DESK_REPLICATIONS = 200
FULL_REPLICATIONS = 1000
DESK_BOOTSTRAP = 200
FULL_BOOTSTRAP = 1000
DESK_BRL_SAMPLES = 20000
DESK_BRL_BURN_IN = 4000
FULL_BRL_SAMPLES = 50000
FULL_BRL_BURN_IN = 10000
REAL_DATA_BRL_SAMPLES = 300000
REAL_DATA_BRL_BURN_IN = 5000

CALIBRATION_EPSILON = 0.01
CALIBRATION_KAPPA_EXPONENT = 0.51
CALIBRATION_MAX_ITERATIONS = 1000
OMEGA_FLOOR = 1e-12

ORACLE_MC_REPS = 5000
ORACLE_COVERAGE_TOLERANCE = 0.002

GIBBS2_PRIOR_LOCATION = 0.75
GIBBS2_PRIOR_SCALE = 0.9**2
BRL_REAL_DATA_INITS = ((2.0, 4.0), (3.0, 4.0))
