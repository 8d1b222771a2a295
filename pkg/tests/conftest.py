"""Shared fixtures: tiny corpora and synthetic geometry helpers."""

from __future__ import annotations

import sys
from datetime import date
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from themeforge.corpus import (
    Channel,
    Corpus,
    Orientation,
    SourceKind,
    TranscriptDoc,
    TranscriptKind,
)


def make_channel(
    channel_id="ch1",
    name="Channel One",
    source_kind=SourceKind.NATIONAL_NEWS,
    orientation=Orientation.CENTER,
    subscriber_count=50_000,
    video_count=100,
) -> Channel:
    return Channel(channel_id, name, source_kind, orientation, subscriber_count, video_count)


def make_video(
    video_id="v1",
    channel_id="ch1",
    title="title",
    published_at=date(2023, 6, 15),
    view_count=1000,
    like_count=10,
    comment_count=5,
    transcript_text="bonjour le monde",
    transcript_kind=TranscriptKind.AUTO,
) -> TranscriptDoc:
    return TranscriptDoc(
        video_id=video_id,
        channel_id=channel_id,
        title=title,
        published_at=published_at,
        view_count=view_count,
        like_count=like_count,
        comment_count=comment_count,
        transcript_text=transcript_text,
        transcript_kind=transcript_kind,
    )


def make_corpus(channels, videos) -> Corpus:
    return Corpus(
        channels={c.channel_id: c for c in channels},
        videos={v.video_id: v for v in videos},
    )


def direction_blobs(
    rng: np.random.Generator, sizes=(70, 70, 60), block: int = 5, max_angle: float = 0.2
) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors in well-separated direction blobs.

    Each blob lives in its own orthogonal coordinate block: one axis for
    the blob center plus private noise dimensions. Cross-blob cosines are
    therefore exactly 0 and within-blob cosines at least cos(2*max_angle)
    (>= 0.92 at the default), guaranteeing the intra >= 0.9 / inter <= 0.1
    separation promise.
    """
    dim = len(sizes) * block
    points = []
    labels = []
    for blob, size in enumerate(sizes):
        axis = blob * block
        for _ in range(size):
            angle = min(abs(rng.normal(0.0, 0.08)), max_angle)
            noise = rng.standard_normal(block - 1)
            noise /= np.linalg.norm(noise)
            vec = np.zeros(dim)
            vec[axis] = np.cos(angle)
            vec[axis + 1 : axis + block] = np.sin(angle) * noise
            points.append(vec)
            labels.append(blob)
    return np.array(points), np.array(labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
