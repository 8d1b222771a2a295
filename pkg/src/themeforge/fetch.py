"""Remote-fetch client surface for video platforms.

Everything network-shaped goes through `PlatformClient`, so tests and
offline runs swap in `FixtureClient` backed by plain files. The protocol is
deliberately tiny: paginated video listing per channel, per-video metadata,
and transcript retrieval that prefers manually-authored tracks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Protocol

from .corpus import Channel, Corpus, TranscriptDoc, TranscriptKind
from .errors import IngestError


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    channel_id: str
    title: str
    published_at: date
    view_count: int
    like_count: int
    comment_count: int


@dataclass(frozen=True)
class TranscriptTrack:
    kind: TranscriptKind
    text: str


class PlatformClient(Protocol):
    def list_channel_videos(
        self, channel_id: str, page_token: str | None = None
    ) -> tuple[list[str], str | None]:
        """Return (video_ids, next_page_token) for one page."""
        ...

    def get_video(self, video_id: str) -> VideoMeta: ...

    def get_transcript(self, video_id: str) -> TranscriptTrack:
        """Best available transcript, manual preferred over auto."""
        ...


class FixtureClient:
    """File-backed stand-in for the remote platform.

    Reads a single JSON file: {"videos": [{...meta, "tracks": {"Manual": str?,
    "Auto": str?}}]}. Pagination is simulated with `page_size`.
    """

    def __init__(self, fixture_path: str | Path, page_size: int = 50):
        with open(fixture_path, encoding="utf-8") as handle:
            raw = json.load(handle)
        self._videos: dict[str, dict] = {v["video_id"]: v for v in raw["videos"]}
        self._page_size = page_size

    def list_channel_videos(
        self, channel_id: str, page_token: str | None = None
    ) -> tuple[list[str], str | None]:
        ids = sorted(
            vid for vid, v in self._videos.items() if v["channel_id"] == channel_id
        )
        start = int(page_token) if page_token else 0
        page = ids[start : start + self._page_size]
        next_token = (
            str(start + self._page_size) if start + self._page_size < len(ids) else None
        )
        return page, next_token

    def get_video(self, video_id: str) -> VideoMeta:
        v = self._videos[video_id]
        return VideoMeta(
            video_id=v["video_id"],
            channel_id=v["channel_id"],
            title=v["title"],
            published_at=date.fromisoformat(v["published_at"]),
            view_count=v["view_count"],
            like_count=v["like_count"],
            comment_count=v["comment_count"],
        )

    def get_transcript(self, video_id: str) -> TranscriptTrack:
        tracks = self._videos[video_id].get("tracks", {})
        if tracks.get("Manual"):
            return TranscriptTrack(TranscriptKind.MANUAL, tracks["Manual"])
        if tracks.get("Auto"):
            return TranscriptTrack(TranscriptKind.AUTO, tracks["Auto"])
        return TranscriptTrack(TranscriptKind.MISSING, "")


def fetch_corpus(channels: list[Channel], client: PlatformClient) -> Corpus:
    """Assemble a corpus by walking a client, channel by channel."""
    channel_map = {c.channel_id: c for c in channels}
    videos: dict[str, TranscriptDoc] = {}
    for channel in channels:
        token: str | None = None
        while True:
            ids, token = client.list_channel_videos(channel.channel_id, token)
            for video_id in ids:
                if video_id in videos:
                    raise IngestError(f"duplicate video {video_id} from client")
                meta = client.get_video(video_id)
                track = client.get_transcript(video_id)
                videos[video_id] = TranscriptDoc(
                    video_id=meta.video_id,
                    channel_id=meta.channel_id,
                    title=meta.title,
                    published_at=meta.published_at,
                    view_count=meta.view_count,
                    like_count=meta.like_count,
                    comment_count=meta.comment_count,
                    transcript_text=track.text,
                    transcript_kind=track.kind,
                )
            if token is None:
                break
    return Corpus(channels=channel_map, videos=videos)
