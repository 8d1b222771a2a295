"""Stance evaluation: accuracy, soft accuracy, and distribution tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from ..analytics.metrics import round_half_away
from ..corpus import Corpus
from ..errors import AlignmentError, UsageError
from .classify import RecordOrigin, StanceLabel, StanceRecord


@dataclass(frozen=True)
class StanceEvalConfig:
    neutral_partial_credit: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.neutral_partial_credit <= 1.0:
            raise UsageError("neutral_partial_credit must be in [0, 1]")


def _aligned_pairs(
    pred: list[StanceRecord], gold: list[StanceRecord]
) -> list[tuple[StanceLabel, StanceLabel]]:
    if not pred or not gold:
        raise AlignmentError("need at least one prediction and one gold record")
    pred_map = {(r.doc_id, r.target_id): r.label for r in pred}
    gold_map = {(r.doc_id, r.target_id): r.label for r in gold}
    if len(pred_map) != len(pred) or len(gold_map) != len(gold):
        raise AlignmentError("duplicate (doc_id, target_id) keys")
    if set(pred_map) != set(gold_map):
        only_pred = sorted(set(pred_map) - set(gold_map))
        only_gold = sorted(set(gold_map) - set(pred_map))
        raise AlignmentError(
            f"misaligned record sets; only-predicted {only_pred[:5]}, only-gold {only_gold[:5]}"
        )
    return [(pred_map[key], gold_map[key]) for key in sorted(pred_map)]


def accuracy(pred: list[StanceRecord], gold: list[StanceRecord]) -> float:
    pairs = _aligned_pairs(pred, gold)
    return sum(p == g for p, g in pairs) / len(pairs)


def soft_accuracy(
    pred: list[StanceRecord],
    gold: list[StanceRecord],
    config: StanceEvalConfig = StanceEvalConfig(),
) -> float:
    """Accuracy with partial credit for Neutral-instead-of-polar predictions."""
    pairs = _aligned_pairs(pred, gold)
    credit = 0.0
    for p, g in pairs:
        if p == g:
            credit += 1.0
        elif p is StanceLabel.NEUTRAL and g in (StanceLabel.AGAINST, StanceLabel.FAVOR):
            credit += config.neutral_partial_credit
    return credit / len(pairs)


@dataclass(frozen=True)
class StanceTableRow:
    group: tuple[str, ...]  # (orientation,), (target,), or (orientation, target)
    n_videos: int
    against_pct: float
    favor_pct: float
    neutral_pct: float


GROUP_BY_CHOICES = ("MediaOrientation", "Target", "OrientationByTarget")


def stance_table(
    records: list[StanceRecord], corpus: Corpus, group_by: str
) -> list[StanceTableRow]:
    """Per-group Against/Favor/Neutral percentages (1 decimal, sums ~100).

    Records must share a single origin; mixing predictions into a gold
    table (or vice versa) is a usage error. Empty groups simply have no row.
    """
    if group_by not in GROUP_BY_CHOICES:
        raise UsageError(f"group_by must be one of {GROUP_BY_CHOICES}")
    origins = {r.origin for r in records}
    if len(origins) > 1:
        raise UsageError("records mix Gold and Predicted origins")

    def key_of(record: StanceRecord) -> tuple[str, ...]:
        orientation = corpus.channels[corpus.videos[record.doc_id].channel_id].orientation
        if group_by == "MediaOrientation":
            return (orientation.value,)
        if group_by == "Target":
            return (record.target_id,)
        return (orientation.value, record.target_id)

    grouped: dict[tuple[str, ...], list[StanceLabel]] = {}
    for record in records:
        grouped.setdefault(key_of(record), []).append(record.label)

    rows = []
    for group in sorted(grouped):
        labels = grouped[group]
        total = len(labels)
        pct = {
            label: round_half_away(100.0 * sum(l == label for l in labels) / total, 1)
            for label in StanceLabel
        }
        rows.append(
            StanceTableRow(
                group=group,
                n_videos=total,
                against_pct=pct[StanceLabel.AGAINST],
                favor_pct=pct[StanceLabel.FAVOR],
                neutral_pct=pct[StanceLabel.NEUTRAL],
            )
        )
    return rows


def write_stance_table_csv(rows: list[StanceTableRow], group_by: str, path: str | Path) -> None:
    headers = {
        "MediaOrientation": ["orientation"],
        "Target": ["target"],
        "OrientationByTarget": ["orientation", "target"],
    }[group_by]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(headers + ["n_videos", "against_pct", "favor_pct", "neutral_pct"])
        for row in rows:
            writer.writerow(
                list(row.group)
                + [row.n_videos, row.against_pct, row.favor_pct, row.neutral_pct]
            )


def read_gold_csv(path: str | Path) -> list[StanceRecord]:
    """Gold labels: CSV with doc_id, target_id, label columns."""
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            records.append(
                StanceRecord(
                    doc_id=row["doc_id"],
                    target_id=row["target_id"],
                    label=StanceLabel(row["label"]),
                    origin=RecordOrigin.GOLD,
                )
            )
    return records
