"""Two-group score files: UTF-8 CSV with header ``score,group`` and group in {0, 1}."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from auc_gibbs.errors import InputError
from auc_gibbs.models import ScoreData

HEADER = ("score", "group")


def parse_score_csv(text: str, source: str = "<input>") -> ScoreData:
    reader = csv.reader(io.StringIO(text.lstrip("\ufeff")))
    header: tuple[str, ...] | None = None
    groups: dict[int, list[float]] = {0: [], 1: []}
    for line_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = tuple(cell.strip() for cell in row)
        if header is None:
            header = tuple(cell.lower() for cell in cells)
            if header != HEADER:
                raise InputError(
                    f"{source}:{line_no}: expected header 'score,group', got {','.join(cells)!r}"
                )
            continue
        if len(cells) != 2:
            raise InputError(f"{source}:{line_no}: expected 2 fields, got {len(cells)}")
        raw_score, raw_group = cells
        try:
            score = float(raw_score)
        except ValueError as exc:
            raise InputError(f"{source}:{line_no}: score is not a number: {raw_score!r}") from exc
        if not math.isfinite(score):
            raise InputError(f"{source}:{line_no}: score must be finite, got {raw_score!r}")
        if raw_group not in {"0", "1"}:
            raise InputError(f"{source}:{line_no}: group must be 0 or 1, got {raw_group!r}")
        groups[int(raw_group)].append(score)

    if header is None:
        raise InputError(f"{source}: empty score file")
    for group, scores in sorted(groups.items(), reverse=True):
        if len(scores) < 2:
            raise InputError(
                f"{source}: group {group} needs at least 2 rows, got {len(scores)}"
            )
    return ScoreData(u=groups[1], v=groups[0])


def read_score_file(path: str | Path) -> ScoreData:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"Score file not found: {file_path}")
    return parse_score_csv(file_path.read_text(encoding="utf-8-sig"), source=str(file_path))


def format_score_csv(data: ScoreData) -> str:
    """Canonical form: header, group 1 rows then group 0 rows, shortest float repr."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HEADER)
    for score in data.u:
        writer.writerow([repr(float(score)), 1])
    for score in data.v:
        writer.writerow([repr(float(score)), 0])
    return buffer.getvalue()


def write_score_file(data: ScoreData, path: str | Path) -> Path:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(format_score_csv(data), encoding="utf-8")
    return file_path


def require_tie_free(data: ScoreData) -> None:
    if data.has_ties():
        raise InputError(
            "ties detected: the rank-likelihood sampler needs distinct scores across both groups"
        )
