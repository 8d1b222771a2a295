"""Quota table, segmentation arithmetic, prompt templates, extraction."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from themeforge.corpus import TranscriptKind, word_count
from themeforge.errors import UsageError
from themeforge.gateway import BackendDescriptor, BackendKind
from themeforge.topics import (
    SEGMENTED,
    Topic,
    build_prompt,
    extract_topics,
    plan_document,
    plan_segments,
    topic_quota,
)

from conftest import make_video
from oracles import segment_windows_oracle

MOCK_GEN = BackendDescriptor(kind=BackendKind.MOCK_GENERATION, seed=3)


QUOTA_TABLE = {
    0: 1,
    1: 1,
    500: 1,
    501: 2,
    1000: 2,
    1001: 3,
    1200: 3,
    1500: 3,
    1501: 4,
    2000: 4,
    2001: 5,
    12000: 5,
}


@pytest.mark.parametrize("wc,expected", sorted(QUOTA_TABLE.items()))
def test_quota_table(wc, expected):
    assert topic_quota(wc) == expected


def test_quota_segmented_beyond_twelve_thousand():
    assert topic_quota(12_001) is SEGMENTED


@given(st.integers(min_value=0, max_value=12_000), st.integers(min_value=0, max_value=12_000))
def test_quota_non_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert topic_quota(lo) <= topic_quota(hi)


@pytest.mark.parametrize(
    "wc,total",
    [
        (13_000, 26),  # 13 full windows x 2
        (12_500, 25),  # 12 full x 2 + one 500-word tail x 1
        (12_001, 25),  # 12 full x 2 + one 1-word tail x 1
        (25_000, 50),
    ],
)
def test_segmentation_totals(wc, total):
    plan = plan_segments(wc)
    assert plan.total_requested == total
    assert plan.segments == tuple(segment_windows_oracle(wc))


def test_segments_cover_without_overlap():
    plan = plan_segments(13_337)
    cursor = 0
    for start, end, requested in plan.segments:
        assert start == cursor
        assert end > start
        assert 1 <= requested <= 5
        cursor = end
    assert cursor == 13_337


def test_plan_segments_guard():
    with pytest.raises(UsageError):
        plan_segments(12_000)


@given(st.integers(min_value=12_001, max_value=100_000))
def test_segment_total_formula(wc):
    plan = plan_segments(wc)
    tail = wc % 1000
    tail_quota = 0 if tail == 0 else topic_quota(tail)
    assert plan.total_requested == 2 * (wc // 1000) + tail_quota


# -- prompts ------------------------------------------------------------------


def test_prompt_one_topic():
    prompt = build_prompt("le texte ici", 1)
    assert "Detect one main topic from the given transcript" in prompt
    assert "All topics should be no more than 3 words and in English." in prompt
    assert prompt.rstrip().endswith("le texte ici")


def test_prompt_five_topic_scaffold():
    prompt = build_prompt("texte", 5)
    assert "Detect five main topics" in prompt
    scaffold = "1. Topic1\n2. Topic2\n3. Topic3\n4. Topic4\n5. Topic5"
    assert scaffold in prompt


def test_prompt_transcript_after_blank_line():
    prompt = build_prompt("corps du texte", 2)
    head, _, tail = prompt.partition("\n\n")
    assert "2. Topic2" in head
    assert tail == "corps du texte"


def test_prompt_guard():
    with pytest.raises(UsageError):
        build_prompt("x", 0)
    with pytest.raises(UsageError):
        build_prompt("x", 6)


# -- extraction ---------------------------------------------------------------


def test_extract_short_doc_yields_one_topic():
    doc = make_video(transcript_text="mot " * 300)
    outcome = extract_topics(doc, MOCK_GEN)
    assert outcome.skipped_reason is None
    assert len(outcome.topics) == 1
    assert outcome.topics[0].quota_rank == 1


def test_extract_mid_doc_at_most_three_topics():
    doc = make_video(transcript_text="mot " * 1100)
    outcome = extract_topics(doc, MOCK_GEN)
    assert 1 <= len(outcome.topics) <= 3


def test_extract_missing_transcript_skips():
    doc = make_video(transcript_text="", transcript_kind=TranscriptKind.MISSING)
    outcome = extract_topics(doc, MOCK_GEN)
    assert outcome.topics == ()
    assert outcome.skipped_reason == "no transcript"


def test_extract_segmented_doc_indices_and_word_rule():
    doc = make_video(transcript_text="mot " * 12_500)
    outcome = extract_topics(doc, MOCK_GEN)
    segments = {t.segment_index for t in outcome.topics}
    assert segments == set(range(13))
    for topic in outcome.topics:
        assert 1 <= word_count(topic.text) <= 3  # post-repair invariant
    keys = [t.key for t in outcome.topics]
    assert len(keys) == len(set(keys))


def test_extract_deterministic():
    doc = make_video(transcript_text="mot " * 700)
    first = extract_topics(doc, MOCK_GEN)
    second = extract_topics(doc, MOCK_GEN)
    assert first == second


def test_topic_word_limit_enforced():
    with pytest.raises(UsageError):
        Topic(text="quatre mots de trop", doc_id="v", segment_index=0, quota_rank=1)


def test_extract_parse_error_tagged_with_doc_and_raw(monkeypatch):
    import themeforge.topics as topics_mod
    from themeforge.errors import ParseError

    monkeypatch.setattr(topics_mod, "generate", lambda req, backend, config: "pas de liste")
    doc = make_video(video_id="vX", transcript_text="mot " * 100)
    with pytest.raises(ParseError) as err:
        extract_topics(doc, MOCK_GEN)
    assert "doc vX segment 0" in str(err.value)
    assert err.value.raw == "pas de liste"
