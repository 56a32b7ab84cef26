from __future__ import annotations

import csv
import io
import math

import requests

from auc_gibbs.config import CA125_URL, REQUEST_TIMEOUT_SECONDS
from auc_gibbs.errors import InputError
from auc_gibbs.jobs.common import log
from auc_gibbs.models import ScoreData


def rows_to_score_data(
    rows: list[dict[str, str]],
    score_column: str = "y2",
    group_column: str = "d",
) -> ScoreData:
    """Diseased subjects (d = 1) become group 1, controls group 0."""
    u: list[float] = []
    v: list[float] = []
    dropped = 0
    for row in rows:
        normalized = {
            str(key).strip().strip('"').lower(): str(value).strip()
            for key, value in row.items()
            if key is not None
        }
        raw_score = normalized.get(score_column, "")
        raw_group = normalized.get(group_column, "")
        if not raw_score or not raw_group:
            dropped += 1
            continue
        try:
            score = float(raw_score)
            group = int(float(raw_group))
        except (ValueError, OverflowError):
            dropped += 1
            continue
        if not math.isfinite(score) or group not in (0, 1):
            dropped += 1
            continue
        if group == 1:
            u.append(score)
        else:
            v.append(score)
    if dropped:
        log(
            "ca125",
            f"dropped {dropped} of {len(rows)} rows without a finite '{score_column}' "
            f"and a 0/1 '{group_column}'",
        )
    if len(u) < 2 or len(v) < 2:
        raise InputError(
            f"biomarker file yielded too few subjects per group (m={len(u)}, n={len(v)}); "
            f"expected columns '{score_column}' and '{group_column}'"
        )
    return ScoreData(u=u, v=v)


class Ca125Client:
    def __init__(
        self,
        url: str = CA125_URL,
        timeout_seconds: int = REQUEST_TIMEOUT_SECONDS,
    ):
        self.url = url
        self.timeout_seconds = timeout_seconds

    def fetch_rows(self) -> list[dict[str, str]]:
        response = requests.get(self.url, timeout=self.timeout_seconds)
        response.raise_for_status()
        return list(csv.DictReader(io.StringIO(response.text)))

    def fetch_scores(self) -> ScoreData:
        return rows_to_score_data(self.fetch_rows())
