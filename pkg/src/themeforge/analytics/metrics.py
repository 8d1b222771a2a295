"""Frequency tables, engagement rankings, and channel theme vectors.

All metrics are pure functions over an immutable corpus plus a
video -> theme-set mapping; grouping follows the source-kind/orientation
cells used throughout the result tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP

import numpy as np

from ..corpus import Channel, Corpus, Orientation, Period, SourceKind, TranscriptDoc
from ..errors import UsageError

NEWS_KINDS = frozenset({SourceKind.NATIONAL_NEWS})
POLITICAL_KINDS = frozenset({SourceKind.POLITICIAN, SourceKind.PARTY})
LOCAL_KINDS = frozenset({SourceKind.LOCAL_NEWS})

IN_WINDOW = (Period.PRE_ELECTION, Period.EUROPEAN, Period.LEGISLATIVE)


@dataclass(frozen=True)
class GroupSpec:
    """A table cell: a set of source kinds, optionally one orientation."""

    label: str
    source_kinds: frozenset[SourceKind]
    orientation: Orientation | None = None

    def matches(self, channel: Channel) -> bool:
        if channel.source_kind not in self.source_kinds:
            return False
        return self.orientation is None or channel.orientation == self.orientation


def news_group(orientation: Orientation) -> GroupSpec:
    return GroupSpec(f"news/{orientation.value}", NEWS_KINDS, orientation)


def political_group(orientation: Orientation) -> GroupSpec:
    return GroupSpec(f"political/{orientation.value}", POLITICAL_KINDS, orientation)


def local_all() -> GroupSpec:
    """Local sources stay one undivided group."""
    return GroupSpec("local/All", LOCAL_KINDS, None)


def round_half_away(value: float, digits: int) -> float:
    return float(Decimal(repr(value)).quantize(Decimal(f"1e-{digits}"), rounding=ROUND_HALF_UP))


def _in_scope(
    video: TranscriptDoc, channel: Channel, group: GroupSpec, period: Period | None
) -> bool:
    if not group.matches(channel):
        return False
    if not video.has_transcript:
        return False
    if period is None:
        return video.period in IN_WINDOW
    return video.period == period


@dataclass(frozen=True)
class FrequencyRow:
    group: str
    period: str
    theme_id: str
    occurrences: int
    percent: float  # 100 * occurrences / group_video_count, 2 decimals


def theme_frequency(
    corpus: Corpus,
    themes_by_video: dict[str, set[str]],
    group: GroupSpec,
    period: Period | None = None,
    theme_names: dict[str, str] | None = None,
) -> list[FrequencyRow]:
    """Per-theme video counts within one (group, period) cell.

    The denominator is the number of transcribed videos in the cell, so
    rows for multi-theme videos may sum past 100%. `period=None` means the
    entire (in-window) collection period. Rows sort by descending
    occurrences, ties by display name (falling back to the theme id).
    """
    scoped = [
        v
        for v in corpus.videos.values()
        if _in_scope(v, corpus.channels[v.channel_id], group, period)
    ]
    group_size = len(scoped)
    counts: dict[str, int] = {}
    for video in scoped:
        for theme_id in themes_by_video.get(video.video_id, set()):
            counts[theme_id] = counts.get(theme_id, 0) + 1
    period_label = "EntirePeriod" if period is None else period.value
    rows = [
        FrequencyRow(
            group=group.label,
            period=period_label,
            theme_id=theme_id,
            occurrences=count,
            percent=round_half_away(100.0 * count / group_size, 2),
        )
        for theme_id, count in counts.items()
    ]
    names = theme_names or {}
    rows.sort(key=lambda r: (-r.occurrences, names.get(r.theme_id, r.theme_id), r.theme_id))
    return rows


@dataclass(frozen=True)
class EngagementRow:
    group: str
    theme_id: str
    metric: str  # "CommentPerView" | "LikePerView"
    mean_ratio: float
    occurrences: int


def engagement_ranking(
    corpus: Corpus,
    themes_by_video: dict[str, set[str]],
    group: GroupSpec,
    metric: str,
    min_occurrence: int = 10,
    pooled: bool = False,
) -> list[EngagementRow]:
    """Themes ranked by mean per-video engagement ratio within a group.

    Zero-view videos are excluded (their ratio is undefined); themes seen
    on fewer than `min_occurrence` ratio-contributing videos are dropped.
    The default is the unweighted mean of per-video ratios; `pooled=True`
    divides summed counts by summed views instead, for sensitivity checks.
    """
    if metric == "CommentPerView":
        count_of = lambda v: v.comment_count
    elif metric == "LikePerView":
        count_of = lambda v: v.like_count
    else:
        raise UsageError(f"unknown engagement metric {metric!r}")

    ratios: dict[str, list[tuple[int, int]]] = {}  # theme -> [(count, views)]
    for video in corpus.videos.values():
        if not _in_scope(video, corpus.channels[video.channel_id], group, None):
            continue
        if video.view_count == 0:
            continue
        for theme_id in themes_by_video.get(video.video_id, set()):
            ratios.setdefault(theme_id, []).append((count_of(video), video.view_count))

    rows = []
    for theme_id, pairs in ratios.items():
        if len(pairs) < min_occurrence:
            continue
        if pooled:
            mean_ratio = sum(c for c, _ in pairs) / sum(v for _, v in pairs)
        else:
            mean_ratio = sum(c / v for c, v in pairs) / len(pairs)
        rows.append(
            EngagementRow(
                group=group.label,
                theme_id=theme_id,
                metric=metric,
                mean_ratio=mean_ratio,
                occurrences=len(pairs),
            )
        )
    rows.sort(key=lambda r: (-r.mean_ratio, r.theme_id))
    return rows


def group_mean_ratio(
    corpus: Corpus, group: GroupSpec, metric: str
) -> float | None:
    """Dataset-wide per-video mean ratio for a group (no theme split)."""
    count_of = (lambda v: v.comment_count) if metric == "CommentPerView" else (
        lambda v: v.like_count
    )
    ratios = [
        count_of(v) / v.view_count
        for v in corpus.videos.values()
        if _in_scope(v, corpus.channels[v.channel_id], group, None) and v.view_count > 0
    ]
    return sum(ratios) / len(ratios) if ratios else None


@dataclass(frozen=True)
class ChannelThemeVector:
    channel_id: str
    theme_ids: tuple[str, ...]
    probabilities: np.ndarray  # aligned with theme_ids, sums to 1

    def top_themes(self, n: int = 5) -> list[tuple[str, float]]:
        order = sorted(
            range(len(self.theme_ids)),
            key=lambda i: (-self.probabilities[i], self.theme_ids[i]),
        )
        return [(self.theme_ids[i], float(self.probabilities[i])) for i in order[:n]]


def channel_theme_vector(
    channel_videos: list[TranscriptDoc],
    themes_by_video: dict[str, set[str]],
    theme_ids: list[str],
    min_videos_viz: int = 20,
) -> ChannelThemeVector | None:
    """Probability distribution over themes for one channel.

    Each theme counts once per video. Channels with fewer than
    `min_videos_viz` themed videos are excluded (returns None); that is a
    scope rule, not a failure.
    """
    if not channel_videos:
        return None
    channel_id = channel_videos[0].channel_id
    themed = [
        v for v in channel_videos if themes_by_video.get(v.video_id)
    ]
    if len(themed) < min_videos_viz:
        return None
    counts = np.zeros(len(theme_ids), dtype=np.float64)
    index = {t: i for i, t in enumerate(theme_ids)}
    for video in themed:
        for theme_id in themes_by_video[video.video_id]:
            counts[index[theme_id]] += 1.0
    return ChannelThemeVector(
        channel_id=channel_id,
        theme_ids=tuple(theme_ids),
        probabilities=counts / counts.sum(),
    )
