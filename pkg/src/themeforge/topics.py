"""Length-proportional topic quotas, segmentation, prompts, and extraction."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import Corpus, TranscriptDoc, TranscriptKind, word_count
from .errors import ParseError, ThemeforgeError, UsageError
from .gateway import (
    BackendDescriptor,
    DEFAULT_CONFIG,
    GatewayConfig,
    GenerationRequest,
    generate,
    parse_numbered_topics,
)

SEGMENT_WORDS = 1000
SEGMENT_THRESHOLD = 12_000


class Segmented:
    """Marker returned by `topic_quota` for transcripts needing segmentation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Segmented"


SEGMENTED = Segmented()


@dataclass(frozen=True)
class Topic:
    text: str
    doc_id: str
    segment_index: int
    quota_rank: int

    def __post_init__(self):
        if not 1 <= word_count(self.text) <= 3:
            raise UsageError(f"topic text must be 1-3 words, got {self.text!r}")
        if self.segment_index < 0 or self.quota_rank < 1:
            raise UsageError("bad topic indices")

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.doc_id, self.segment_index, self.quota_rank)


@dataclass(frozen=True)
class QuotaPlan:
    segments: tuple[tuple[int, int, int], ...]  # (start_word, end_word, topics_requested)

    @property
    def total_requested(self) -> int:
        return sum(n for _, _, n in self.segments)


def topic_quota(wc: int) -> int | Segmented:
    """Word count -> topic count, per the prompt table.

    Returns `SEGMENTED` beyond 12,000 words, where transcripts are split
    into 1,000-word segments instead.
    """
    if wc < 0:
        raise UsageError("word count must be >= 0")
    if wc <= 500:
        return 1
    if wc <= 1000:
        return 2
    if wc <= 1500:
        return 3
    if wc <= 2000:
        return 4
    if wc <= SEGMENT_THRESHOLD:
        return 5
    return SEGMENTED


def plan_segments(wc: int) -> QuotaPlan:
    """Split an over-long transcript into consecutive 1,000-word windows.

    Full windows request two topics each; a short tail window requests
    whatever its own length dictates per `topic_quota`.
    """
    if wc <= SEGMENT_THRESHOLD:
        raise UsageError(f"plan_segments requires word count > {SEGMENT_THRESHOLD}")
    segments = []
    full, tail = divmod(wc, SEGMENT_WORDS)
    for i in range(full):
        segments.append((i * SEGMENT_WORDS, (i + 1) * SEGMENT_WORDS, 2))
    if tail:
        quota = topic_quota(tail)
        segments.append((full * SEGMENT_WORDS, wc, quota))
    return QuotaPlan(segments=tuple(segments))


def plan_document(wc: int) -> QuotaPlan:
    """Quota plan for any transcript length (single segment when small)."""
    quota = topic_quota(wc)
    if quota is SEGMENTED:
        return plan_segments(wc)
    return QuotaPlan(segments=((0, wc, quota),))


_NUMBER_WORDS = {1: "one", 2: "two", 3: "three", 4: "four", 5: "five"}


def build_prompt(segment_text: str, topics_requested: int) -> str:
    """Render the extraction prompt for a segment.

    The instruction block is fixed per requested count; the transcript is
    appended after a blank line.
    """
    if topics_requested not in _NUMBER_WORDS:
        raise UsageError(f"topics_requested must be in 1..5, got {topics_requested}")
    noun = "main topic" if topics_requested == 1 else "main topics"
    scaffold = "\n".join(f"{i}. Topic{i}" for i in range(1, topics_requested + 1))
    return (
        f"You are given a transcript of the video. "
        f"Detect {_NUMBER_WORDS[topics_requested]} {noun} from the given transcript. "
        f"All topics should be no more than 3 words and in English.\n"
        f"Generate your response in the following way:\n"
        f"{scaffold}\n"
        f"\n"
        f"{segment_text}"
    )


@dataclass(frozen=True)
class ExtractionOutcome:
    doc_id: str
    topics: tuple[Topic, ...]
    skipped_reason: str | None = None


def extract_topics(
    doc: TranscriptDoc,
    backend: BackendDescriptor,
    config: GatewayConfig = DEFAULT_CONFIG,
) -> ExtractionOutcome:
    """Generate, parse, and repair topics for every planned segment of a doc.

    Missing transcripts yield a skip record rather than an error; gateway
    failures propagate tagged with (doc_id, segment_index).
    """
    if doc.transcript_kind is TranscriptKind.MISSING or doc.word_count == 0:
        return ExtractionOutcome(doc_id=doc.video_id, topics=(), skipped_reason="no transcript")
    words = doc.transcript_text.split()
    plan = plan_document(doc.word_count)
    topics: list[Topic] = []
    for segment_index, (start, end, requested) in enumerate(plan.segments):
        segment_text = " ".join(words[start:end])
        prompt = build_prompt(segment_text, requested)
        try:
            completion = generate(GenerationRequest(prompt=prompt), backend, config)
            parsed = parse_numbered_topics(completion, expected_n=requested)
        except ParseError as exc:
            raise ParseError(
                f"doc {doc.video_id} segment {segment_index}: {exc}", raw=exc.raw
            ) from exc
        except ThemeforgeError as exc:
            raise type(exc)(
                f"doc {doc.video_id} segment {segment_index}: {exc}"
            ) from exc
        for item in parsed:
            topics.append(
                Topic(
                    text=item.text,
                    doc_id=doc.video_id,
                    segment_index=segment_index,
                    quota_rank=item.rank,
                )
            )
    return ExtractionOutcome(doc_id=doc.video_id, topics=tuple(topics))


def extract_corpus(
    corpus: Corpus,
    backend: BackendDescriptor,
    config: GatewayConfig = DEFAULT_CONFIG,
    max_workers: int = 8,
) -> list[ExtractionOutcome]:
    """Extract topics for every document, canonically ordered by doc id.

    Documents are independent work items; completion order never affects
    the output ordering.
    """
    docs = sorted(corpus.videos.values(), key=lambda d: d.video_id)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outcomes = list(pool.map(lambda d: extract_topics(d, backend, config), docs))
    return outcomes
