"""Corpus data model: channels, videos, transcripts, filters, and periods.

Input files are UTF-8 JSON lines with a fixed field set per record kind;
see `CHANNEL_FIELDS` and `VIDEO_FIELDS`. A corpus is immutable after
ingestion, so readers can share it freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import IngestError


class SourceKind(Enum):
    NATIONAL_NEWS = "NationalNews"
    LOCAL_NEWS = "LocalNews"
    POLITICIAN = "Politician"
    PARTY = "Party"


class Orientation(Enum):
    LEFT = "Left"
    CENTER = "Center"
    RIGHT = "Right"
    FAR_RIGHT = "FarRight"
    UNLABELED = "Unlabeled"


class TranscriptKind(Enum):
    MANUAL = "Manual"
    AUTO = "Auto"
    MISSING = "Missing"


class Period(Enum):
    PRE_ELECTION = "PreElection"
    EUROPEAN = "European"
    LEGISLATIVE = "Legislative"
    OUT_OF_WINDOW = "OutOfWindow"


PRE_ELECTION_START = date(2023, 3, 1)
EUROPEAN_START = date(2024, 3, 1)
LEGISLATIVE_START = date(2024, 6, 8)
LEGISLATIVE_END = date(2024, 7, 15)  # inclusive

CHANNEL_FIELDS = (
    "channel_id",
    "name",
    "source_kind",
    "orientation",
    "subscriber_count",
    "video_count",
)

VIDEO_FIELDS = (
    "video_id",
    "channel_id",
    "title",
    "published_at",
    "view_count",
    "like_count",
    "comment_count",
    "transcript_text",
    "transcript_kind",
)


def word_count(text: str) -> int:
    """Count maximal nonblank runs after Unicode-whitespace splitting."""
    return len(text.split())


def assign_period(published_at: date) -> Period:
    """Map a publish date onto the election-period windows.

    Pre-election and European windows are half-open [start, end); the
    legislative window includes its final day.
    """
    if PRE_ELECTION_START <= published_at < EUROPEAN_START:
        return Period.PRE_ELECTION
    if EUROPEAN_START <= published_at < LEGISLATIVE_START:
        return Period.EUROPEAN
    if LEGISLATIVE_START <= published_at <= LEGISLATIVE_END:
        return Period.LEGISLATIVE
    return Period.OUT_OF_WINDOW


@dataclass(frozen=True)
class Channel:
    channel_id: str
    name: str
    source_kind: SourceKind
    orientation: Orientation
    subscriber_count: int
    video_count: int

    def __post_init__(self):
        if self.subscriber_count < 0:
            raise IngestError(f"channel {self.channel_id}: negative subscriber_count")
        if self.video_count < 0:
            raise IngestError(f"channel {self.channel_id}: negative video_count")


@dataclass(frozen=True)
class TranscriptDoc:
    video_id: str
    channel_id: str
    title: str
    published_at: date
    view_count: int
    like_count: int
    comment_count: int
    transcript_text: str
    transcript_kind: TranscriptKind
    word_count: int = field(init=False)

    def __post_init__(self):
        for name in ("view_count", "like_count", "comment_count"):
            if getattr(self, name) < 0:
                raise IngestError(f"video {self.video_id}: negative {name}")
        empty = self.transcript_text == ""
        if empty != (self.transcript_kind is TranscriptKind.MISSING):
            raise IngestError(
                f"video {self.video_id}: transcript_kind {self.transcript_kind.value} "
                "inconsistent with transcript_text"
            )
        object.__setattr__(self, "word_count", word_count(self.transcript_text))

    @property
    def period(self) -> Period:
        return assign_period(self.published_at)

    @property
    def has_transcript(self) -> bool:
        return self.transcript_kind is not TranscriptKind.MISSING


@dataclass(frozen=True)
class FilterRules:
    min_videos_political: int = 10
    min_subs_national: int = 10_000
    min_subs_local: int = 5_000
    min_videos_viz: int = 20

    def __post_init__(self):
        for name in (
            "min_videos_political",
            "min_subs_national",
            "min_subs_local",
            "min_videos_viz",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Corpus:
    channels: dict[str, Channel]
    videos: dict[str, TranscriptDoc]
    snapshot_date: date | None = None

    def channel_videos(self, channel_id: str) -> list[TranscriptDoc]:
        return [v for v in self.videos.values() if v.channel_id == channel_id]

    def __len__(self) -> int:
        return len(self.videos)


def _parse_jsonl(path: Path, expected_fields: tuple[str, ...]) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path.name}:{lineno}: malformed JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise IngestError(f"{path.name}:{lineno}: expected a JSON object")
            got = set(record)
            want = set(expected_fields)
            if got != want:
                missing = sorted(want - got)
                extra = sorted(got - want)
                parts = []
                if missing:
                    parts.append(f"missing fields {missing}")
                if extra:
                    parts.append(f"unexpected fields {extra}")
                raise IngestError(f"{path.name}:{lineno}: {'; '.join(parts)}")
            yield lineno, record


def _channel_from_record(record: dict, where: str) -> Channel:
    try:
        return Channel(
            channel_id=str(record["channel_id"]),
            name=str(record["name"]),
            source_kind=SourceKind(record["source_kind"]),
            orientation=Orientation(record["orientation"]),
            subscriber_count=int(record["subscriber_count"]),
            video_count=int(record["video_count"]),
        )
    except (ValueError, TypeError) as exc:
        raise IngestError(f"{where}: {exc}") from exc


def _video_from_record(record: dict, where: str) -> TranscriptDoc:
    try:
        return TranscriptDoc(
            video_id=str(record["video_id"]),
            channel_id=str(record["channel_id"]),
            title=str(record["title"]),
            published_at=date.fromisoformat(record["published_at"]),
            view_count=int(record["view_count"]),
            like_count=int(record["like_count"]),
            comment_count=int(record["comment_count"]),
            transcript_text=str(record["transcript_text"]),
            transcript_kind=TranscriptKind(record["transcript_kind"]),
        )
    except IngestError:
        raise
    except (ValueError, TypeError) as exc:
        raise IngestError(f"{where}: {exc}") from exc


def ingest_corpus(channels_path: str | Path, videos_path: str | Path) -> Corpus:
    """Load a corpus from JSON-lines files, enforcing referential integrity.

    Raises `IngestError` with the offending line number on malformed input,
    duplicate ids, or a video referencing an unknown channel.
    """
    channels_path = Path(channels_path)
    videos_path = Path(videos_path)

    channels: dict[str, Channel] = {}
    for lineno, record in _parse_jsonl(channels_path, CHANNEL_FIELDS):
        channel = _channel_from_record(record, f"{channels_path.name}:{lineno}")
        if channel.channel_id in channels:
            raise IngestError(
                f"{channels_path.name}:{lineno}: duplicate channel {channel.channel_id}"
            )
        channels[channel.channel_id] = channel

    videos: dict[str, TranscriptDoc] = {}
    for lineno, record in _parse_jsonl(videos_path, VIDEO_FIELDS):
        video = _video_from_record(record, f"{videos_path.name}:{lineno}")
        if video.video_id in videos:
            raise IngestError(
                f"{videos_path.name}:{lineno}: duplicate video {video.video_id}"
            )
        if video.channel_id not in channels:
            raise IngestError(
                f"{videos_path.name}:{lineno}: video {video.video_id} references "
                f"unknown channel {video.channel_id}"
            )
        videos[video.video_id] = video

    return Corpus(channels=channels, videos=videos)


def channel_record(channel: Channel) -> dict:
    return {
        "channel_id": channel.channel_id,
        "name": channel.name,
        "source_kind": channel.source_kind.value,
        "orientation": channel.orientation.value,
        "subscriber_count": channel.subscriber_count,
        "video_count": channel.video_count,
    }


def video_record(video: TranscriptDoc) -> dict:
    return {
        "video_id": video.video_id,
        "channel_id": video.channel_id,
        "title": video.title,
        "published_at": video.published_at.isoformat(),
        "view_count": video.view_count,
        "like_count": video.like_count,
        "comment_count": video.comment_count,
        "transcript_text": video.transcript_text,
        "transcript_kind": video.transcript_kind.value,
    }


def _dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n"


def write_channels(channels: Iterable[Channel], path: str | Path) -> None:
    """Serialize channels in canonical field order, one JSON object per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for channel in channels:
            handle.write(_dump_line(channel_record(channel)))


def write_videos(videos: Iterable[TranscriptDoc], path: str | Path) -> None:
    """Serialize videos in canonical field order, one JSON object per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for video in videos:
            handle.write(_dump_line(video_record(video)))


def _keep_channel(channel: Channel, rules: FilterRules) -> bool:
    if channel.source_kind in (SourceKind.POLITICIAN, SourceKind.PARTY):
        return channel.video_count > rules.min_videos_political
    if channel.source_kind is SourceKind.NATIONAL_NEWS:
        return channel.subscriber_count >= rules.min_subs_national
    return channel.subscriber_count > rules.min_subs_local


def apply_filters(corpus: Corpus, rules: FilterRules) -> Corpus:
    """Drop channels below the inclusion thresholds, plus their videos.

    Threshold strictness follows the stated rules: political channels need
    strictly more than `min_videos_political` videos, national news needs at
    least `min_subs_national` subscribers, local news strictly more than
    `min_subs_local`.
    """
    kept = {
        cid: ch for cid, ch in corpus.channels.items() if _keep_channel(ch, rules)
    }
    videos = {vid: v for vid, v in corpus.videos.items() if v.channel_id in kept}
    return replace(corpus, channels=kept, videos=videos)
