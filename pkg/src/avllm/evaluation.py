"""Evaluation arithmetic over judge-record files.

Two record kinds are consumed, both newline-delimited JSON so any judge
(automated or human) can produce them:

* pairwise judgments ``{"item_id": ..., "verdict": "win"|"lose"|"tie"}``,
  tallied from model A's perspective, and
* expert scores ``{"model_tag", "item_id", "fluency", "accuracy",
  "timeliness"}`` on a 0-5 scale, aggregated to per-dimension means plus
  their total.

Win rates are reported under both conventions, ties counted in the
denominator and ties excluded, because published comparison tables are not
consistent about which one they use. The excluding-ties rate is absent (not
zero) when every judgment is a tie.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyInput, FormatError

__all__ = [
    "VERDICTS",
    "SCORE_DIMENSIONS",
    "PairwiseJudgment",
    "ScoreRecord",
    "TallyReport",
    "ModelScoreSummary",
    "pairwise_tally",
    "expert_score_aggregate",
    "load_judgments",
    "load_scores",
    "sample_judgments",
    "sample_score_items",
    "render_tally_table",
    "render_score_table",
]

VERDICTS = ("win", "lose", "tie")
SCORE_DIMENSIONS = ("fluency", "accuracy", "timeliness")
SCORE_MIN, SCORE_MAX = 0.0, 5.0


@dataclass(frozen=True)
class PairwiseJudgment:
    item_id: str
    verdict: str

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")


@dataclass(frozen=True)
class ScoreRecord:
    model_tag: str
    item_id: str
    fluency: float
    accuracy: float
    timeliness: float

    def __post_init__(self) -> None:
        for dim in SCORE_DIMENSIONS:
            value = getattr(self, dim)
            if not (SCORE_MIN <= value <= SCORE_MAX):
                raise ValueError(f"{dim} score {value} outside [{SCORE_MIN}, {SCORE_MAX}]")


@dataclass(frozen=True)
class TallyReport:
    win: int
    lose: int
    tie: int
    win_rate_including_ties: float
    win_rate_excluding_ties: float | None

    @property
    def total(self) -> int:
        return self.win + self.lose + self.tie

    def to_dict(self) -> dict:
        return {
            "win": self.win,
            "lose": self.lose,
            "tie": self.tie,
            "total": self.total,
            "win_rate_including_ties": self.win_rate_including_ties,
            "win_rate_excluding_ties": self.win_rate_excluding_ties,
        }


@dataclass(frozen=True)
class ModelScoreSummary:
    model_tag: str
    fluency_mean: float
    accuracy_mean: float
    timeliness_mean: float
    total: float
    record_count: int

    def to_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "fluency_mean": self.fluency_mean,
            "accuracy_mean": self.accuracy_mean,
            "timeliness_mean": self.timeliness_mean,
            "total": self.total,
            "record_count": self.record_count,
        }


def pairwise_tally(judgments: list[PairwiseJudgment]) -> TallyReport:
    """Count win/lose/tie and compute both win-rate conventions."""
    if not judgments:
        raise EmptyInput("no judgments to tally")
    win = sum(1 for j in judgments if j.verdict == "win")
    lose = sum(1 for j in judgments if j.verdict == "lose")
    tie = sum(1 for j in judgments if j.verdict == "tie")
    including = win / (win + lose + tie)
    excluding = win / (win + lose) if win + lose > 0 else None
    return TallyReport(win, lose, tie, including, excluding)


def expert_score_aggregate(records: list[ScoreRecord]) -> dict[str, ModelScoreSummary]:
    """Per model tag: mean of each dimension plus the total of the three means.

    Model tags keep their order of first appearance in the input.
    """
    if not records:
        raise EmptyInput("no score records to aggregate")
    grouped: dict[str, list[ScoreRecord]] = {}
    for record in records:
        grouped.setdefault(record.model_tag, []).append(record)
    summaries: dict[str, ModelScoreSummary] = {}
    for tag, group in grouped.items():
        n = len(group)
        fluency = sum(r.fluency for r in group) / n
        accuracy = sum(r.accuracy for r in group) / n
        timeliness = sum(r.timeliness for r in group) / n
        summaries[tag] = ModelScoreSummary(
            model_tag=tag,
            fluency_mean=fluency,
            accuracy_mean=accuracy,
            timeliness_mean=timeliness,
            total=fluency + accuracy + timeliness,
            record_count=n,
        )
    return summaries


# -- file loading ------------------------------------------------------------


def _iter_json_lines(path: Path):
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(
                    f"invalid JSON ({exc.msg})", path=str(path), line=line_no
                ) from exc
            if not isinstance(record, dict):
                raise FormatError("line is not a JSON object", path=str(path), line=line_no)
            yield line_no, record


def load_judgments(path: str | Path) -> list[PairwiseJudgment]:
    path = Path(path)
    judgments: list[PairwiseJudgment] = []
    for line_no, record in _iter_json_lines(path):
        try:
            judgments.append(
                PairwiseJudgment(item_id=str(record["item_id"]), verdict=record["verdict"])
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad judgment: {exc}", path=str(path), line=line_no) from exc
    return judgments


def load_scores(path: str | Path) -> list[ScoreRecord]:
    path = Path(path)
    records: list[ScoreRecord] = []
    for line_no, record in _iter_json_lines(path):
        try:
            records.append(
                ScoreRecord(
                    model_tag=str(record["model_tag"]),
                    item_id=str(record["item_id"]),
                    fluency=float(record["fluency"]),
                    accuracy=float(record["accuracy"]),
                    timeliness=float(record["timeliness"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad score record: {exc}", path=str(path), line=line_no) from exc
    return records


# -- sampling ----------------------------------------------------------------


def sample_judgments(
    judgments: list[PairwiseJudgment], n: int, seed: int
) -> list[PairwiseJudgment]:
    """Seeded sample of n judgments (all of them when n >= len)."""
    if n >= len(judgments):
        return list(judgments)
    return random.Random(seed).sample(judgments, n)


def sample_score_items(records: list[ScoreRecord], n: int, seed: int) -> list[ScoreRecord]:
    """Seeded sample of n item ids, keeping every model's records for those items."""
    item_ids = []
    seen = set()
    for record in records:
        if record.item_id not in seen:
            seen.add(record.item_id)
            item_ids.append(record.item_id)
    if n < len(item_ids):
        keep = set(random.Random(seed).sample(item_ids, n))
    else:
        keep = seen
    return [r for r in records if r.item_id in keep]


# -- rendering ---------------------------------------------------------------


def _format_rate(rate: float | None) -> str:
    return "n/a" if rate is None else f"{rate:.4f}"


def render_tally_table(tally: TallyReport) -> str:
    headers = ["Win", "Lose", "Tie", "Total", "Win% (ties counted)", "Win% (ties excluded)"]
    values = [
        str(tally.win),
        str(tally.lose),
        str(tally.tie),
        str(tally.total),
        _format_rate(tally.win_rate_including_ties),
        _format_rate(tally.win_rate_excluding_ties),
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    row = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return head + "\n" + row


def render_score_table(summaries: dict[str, ModelScoreSummary]) -> str:
    headers = ["Model", "Fluency", "Accuracy", "Timeliness", "Total", "N"]
    rows = [
        [
            s.model_tag,
            f"{s.fluency_mean:.2f}",
            f"{s.accuracy_mean:.2f}",
            f"{s.timeliness_mean:.2f}",
            f"{s.total:.2f}",
            str(s.record_count),
        ]
        for s in summaries.values()
    ]
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = ["  ".join(headers[i].ljust(widths[i]) for i in range(len(headers)))]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines)
