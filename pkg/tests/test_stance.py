"""Fuzzy mentions, stance classification, and evaluation metrics."""

from __future__ import annotations

import numpy as np
import pytest

from themeforge.errors import AlignmentError, ClassificationError, UsageError
from themeforge.gateway import BackendDescriptor, BackendKind
from themeforge.stance import (
    RecordOrigin,
    StanceEvalConfig,
    StanceLabel,
    StanceRecord,
    TargetSpec,
    accuracy,
    classify_stance,
    find_mentions,
    fold,
    parse_stance_label,
    select_relevant_docs,
    soft_accuracy,
    stance_table,
)
from themeforge.stance._editdist_py import indel_similarity as indel_py
from themeforge.stance.matching import indel_similarity

from conftest import make_channel, make_corpus, make_video
from oracles import indel_similarity_oracle, soft_accuracy_oracle

BARDELLA = TargetSpec(target_id="bardella", display_name="Jordan Bardella", aliases=("Bardella",))
MELENCHON = TargetSpec(target_id="melenchon", display_name="Mélenchon", aliases=("Mélenchon",))
MOCK_GEN = BackendDescriptor(kind=BackendKind.MOCK_GENERATION, seed=21)


# -- scoring kernel ---------------------------------------------------------


def test_kernel_matches_lcs_oracle_random(rng):
    alphabet = "abcdefé "
    for _ in range(300):
        a = "".join(rng.choice(list(alphabet), size=rng.integers(0, 12)))
        b = "".join(rng.choice(list(alphabet), size=rng.integers(0, 12)))
        assert indel_similarity(a, b) == pytest.approx(indel_similarity_oracle(a, b))


def test_native_and_python_kernels_agree(rng):
    alphabet = "abcdefgh éàç"
    for _ in range(200):
        a = "".join(rng.choice(list(alphabet), size=rng.integers(0, 20)))
        b = "".join(rng.choice(list(alphabet), size=rng.integers(0, 20)))
        assert indel_similarity(a, b) == indel_py(a, b)


def test_kernel_edge_cases():
    assert indel_similarity("", "") == 100.0
    assert indel_similarity("a", "") == 0.0
    assert indel_similarity("abc", "abc") == 100.0


# -- find_mentions ------------------------------------------------------------


def doc_with(text: str):
    return make_video(transcript_text=text)


def test_exact_mention_scores_100():
    spans = find_mentions(doc_with("hier Macron a parlé"), TargetSpec("m", "Macron", ("Macron",)), 85)
    assert len(spans) == 1
    assert spans[0].score == 100.0
    assert spans[0].text == "Macron"


def test_misspelled_mention_matches_at_85():
    spans = find_mentions(doc_with("discours de Jordan Bardela hier"), BARDELLA, 85)
    assert spans, "Bardela should fuzzy-match Bardella"
    oracle = indel_similarity_oracle("bardella", "bardela")
    assert oracle >= 85
    assert spans[0].score == pytest.approx(oracle)
    assert spans[0].text == "Bardela"


def test_unrelated_city_does_not_match():
    spans = find_mentions(doc_with("un voyage à Bordeaux"), BARDELLA, 85)
    assert spans == []
    assert indel_similarity_oracle("bardella", "bordeaux") < 85


def test_diacritic_folding_scores_100():
    spans = find_mentions(doc_with("selon Melenchon hier"), MELENCHON, 85)
    assert len(spans) == 1
    assert spans[0].score == 100.0


def test_case_and_diacritic_invariance_of_transcript():
    base = find_mentions(doc_with("selon Mélenchon hier"), MELENCHON, 85)
    upper = find_mentions(doc_with("SELON MÉLENCHON HIER"), MELENCHON, 85)
    stripped = find_mentions(doc_with("selon Melenchon hier"), MELENCHON, 85)
    assert [s.score for s in base] == [s.score for s in upper] == [s.score for s in stripped]


def test_multiword_alias_window():
    target = TargetSpec("lp", "Le Pen", aliases=("Le Pen",))
    spans = find_mentions(doc_with("Marine Le Pen a réagi"), target, 85)
    assert len(spans) == 1
    assert spans[0].text == "Le Pen"


def test_mention_offsets_point_into_original_text():
    text = "début Bardella fin"
    spans = find_mentions(doc_with(text), BARDELLA, 85)
    assert text[spans[0].start : spans[0].end] == "Bardella"


def test_threshold_guard():
    with pytest.raises(UsageError):
        find_mentions(doc_with("x"), BARDELLA, 101)


# -- select_relevant_docs --------------------------------------------------


def corpus_with_mentions(n_mentioning: int, n_other: int = 3):
    channel = make_channel()
    videos = [
        make_video(video_id=f"hit{i}", transcript_text=f"partie {i} avec Bardella présent")
        for i in range(n_mentioning)
    ]
    videos += [
        make_video(video_id=f"miss{i}", transcript_text="rien de pertinent ici")
        for i in range(n_other)
    ]
    return make_corpus([channel], videos)


def test_relevance_boundary_at_min_docs():
    target49 = TargetSpec("b", "B", ("Bardella",), min_relevant_docs=50)
    result = select_relevant_docs(corpus_with_mentions(49), target49)
    assert result.excluded
    assert result.count == 49
    result = select_relevant_docs(corpus_with_mentions(50), target49)
    assert not result.excluded
    assert result.count == 50


def test_relevance_absent_target_excluded_zero():
    target = TargetSpec("z", "Zemmour", ("Zemmour",))
    result = select_relevant_docs(corpus_with_mentions(0), target)
    assert result.excluded
    assert result.count == 0


# -- classification ---------------------------------------------------------


def test_parse_stance_label_tolerant():
    assert parse_stance_label("FAVORABLE.") is StanceLabel.FAVOR
    assert parse_stance_label("  neutral\n") is StanceLabel.NEUTRAL
    assert parse_stance_label("The stance is Negative") is StanceLabel.AGAINST
    assert parse_stance_label("maybe") is None
    assert parse_stance_label("favor or against") is None  # ambiguous


def test_classify_stance_deterministic_and_valid():
    doc = make_video(transcript_text="Bardella a parlé longuement hier soir")
    first = classify_stance(doc, BARDELLA, MOCK_GEN)
    second = classify_stance(doc, BARDELLA, MOCK_GEN)
    assert first == second
    assert first.origin is RecordOrigin.PREDICTED
    assert first.label in StanceLabel


def test_classify_stance_mock_keyed_neutral():
    # seed 1 pinned during development: the mock answers Neutral here
    doc = make_video(transcript_text="Bardella a parlé longuement hier soir")
    backend = BackendDescriptor(kind=BackendKind.MOCK_GENERATION, seed=1)
    assert classify_stance(doc, BARDELLA, backend).label is StanceLabel.NEUTRAL


def test_classify_stance_unparseable_twice_errors(monkeypatch):
    import themeforge.stance.classify as classify_mod

    calls = []

    def bad_generate(request, backend, config=None):
        calls.append(request.prompt)
        return "maybe"

    monkeypatch.setattr(classify_mod, "generate", bad_generate)
    doc = make_video()
    with pytest.raises(ClassificationError) as err:
        classify_stance(doc, BARDELLA, MOCK_GEN)
    assert len(calls) == 2
    assert err.value.raw == "maybe"


# -- metrics ------------------------------------------------------------------


def records(labels, origin=RecordOrigin.PREDICTED, target="t"):
    return [
        StanceRecord(doc_id=f"d{i}", target_id=target, label=l, origin=origin)
        for i, l in enumerate(labels)
    ]


F, A, N = StanceLabel.FAVOR, StanceLabel.AGAINST, StanceLabel.NEUTRAL


def test_accuracy_worked_example():
    gold = records([F, A, N], RecordOrigin.GOLD)
    pred = records([N, A, N])
    assert accuracy(pred, gold) == pytest.approx(2 / 3)


def test_accuracy_identity_and_misalignment():
    gold = records([F, A, N], RecordOrigin.GOLD)
    assert accuracy(records([F, A, N]), gold) == 1.0
    disjoint = [
        StanceRecord(doc_id="other", target_id="t", label=F, origin=RecordOrigin.PREDICTED)
    ]
    with pytest.raises(AlignmentError):
        accuracy(disjoint, gold)


def test_soft_accuracy_worked_example():
    gold = records([F, A, N], RecordOrigin.GOLD)
    pred = records([N, A, N])
    got = soft_accuracy(pred, gold, StanceEvalConfig(neutral_partial_credit=0.5))
    assert got == pytest.approx((0.5 + 1 + 1) / 3, abs=1e-9)
    assert got == pytest.approx(0.8333, abs=5e-5)


def test_soft_accuracy_collapses_to_accuracy_at_zero_credit():
    gold = records([F, A, N, A], RecordOrigin.GOLD)
    pred = records([N, N, N, A])
    config = StanceEvalConfig(neutral_partial_credit=0.0)
    assert soft_accuracy(pred, gold, config) == accuracy(pred, gold)


def test_soft_accuracy_properties_random(rng):
    labels = [F, A, N]
    for _ in range(300):
        n = int(rng.integers(1, 30))
        gold = records([labels[i] for i in rng.integers(0, 3, n)], RecordOrigin.GOLD)
        pred = records([labels[i] for i in rng.integers(0, 3, n)])
        c = float(rng.random())
        config = StanceEvalConfig(neutral_partial_credit=c)
        acc = accuracy(pred, gold)
        soft = soft_accuracy(pred, gold, config)
        assert soft >= acc - 1e-12
        oracle = soft_accuracy_oracle(
            [(p.label.value, g.label.value) for p, g in zip(pred, gold)], c
        )
        assert soft == pytest.approx(oracle, abs=1e-12)
        has_neutral_confusion = any(
            p.label is N and g.label is not N for p, g in zip(pred, gold)
        )
        if soft > acc:
            assert has_neutral_confusion and c > 0
        else:
            assert not has_neutral_confusion or c == 0.0
        # monotone in c
        higher = soft_accuracy(pred, gold, StanceEvalConfig(min(1.0, c + 0.3)))
        assert higher >= soft - 1e-12


def test_eval_config_guard():
    with pytest.raises(UsageError):
        StanceEvalConfig(neutral_partial_credit=1.5)


# -- tables -------------------------------------------------------------------


def stance_corpus():
    from themeforge.corpus import Orientation

    channels = [
        make_channel(channel_id="left", orientation=Orientation.LEFT),
        make_channel(channel_id="right", orientation=Orientation.RIGHT),
    ]
    videos = [
        make_video(video_id=f"v{i}", channel_id="left" if i < 4 else "right")
        for i in range(8)
    ]
    return make_corpus(channels, videos)


def rec(doc_id, label, target="macron"):
    return StanceRecord(doc_id=doc_id, target_id=target, label=label, origin=RecordOrigin.PREDICTED)


def test_stance_table_direct_proportion():
    corpus = stance_corpus()
    recs = [rec("v0", A), rec("v1", A), rec("v2", N), rec("v3", N)]
    rows = stance_table(recs, corpus, "MediaOrientation")
    assert len(rows) == 1
    row = rows[0]
    assert row.group == ("Left",)
    assert (row.against_pct, row.favor_pct, row.neutral_pct) == (50.0, 0.0, 50.0)
    assert row.n_videos == 4


def test_stance_table_single_record():
    corpus = stance_corpus()
    rows = stance_table([rec("v5", F)], corpus, "MediaOrientation")
    assert rows[0].group == ("Right",)
    assert (rows[0].against_pct, rows[0].favor_pct, rows[0].neutral_pct) == (0.0, 100.0, 0.0)


def test_stance_table_orientation_by_target_grid():
    corpus = stance_corpus()
    recs = [
        rec("v0", A, "macron"),
        rec("v1", N, "macron"),
        rec("v0", N, "bardella"),
        rec("v5", F, "macron"),
    ]
    rows = stance_table(recs, corpus, "OrientationByTarget")
    keys = [r.group for r in rows]
    assert keys == [("Left", "bardella"), ("Left", "macron"), ("Right", "macron")]


def test_stance_table_rows_sum_to_100(rng):
    corpus = stance_corpus()
    labels = [F, A, N]
    for _ in range(50):
        n = int(rng.integers(1, 40))
        recs = [
            rec(f"v{int(rng.integers(0, 8))}_{i}", labels[int(rng.integers(0, 3))])
            for i in range(n)
        ]
        # doc ids must exist in the corpus for orientation lookup
        recs = [
            StanceRecord(
                doc_id=f"v{int(rng.integers(0, 8))}",
                target_id=f"t{i}",
                label=r.label,
                origin=r.origin,
            )
            for i, r in enumerate(recs)
        ]
        for row in stance_table(recs, corpus, "MediaOrientation"):
            assert abs(row.against_pct + row.favor_pct + row.neutral_pct - 100.0) <= 0.1 + 1e-9


def test_stance_table_rejects_mixed_origins():
    corpus = stance_corpus()
    mixed = [
        rec("v0", A),
        StanceRecord(doc_id="v1", target_id="t", label=N, origin=RecordOrigin.GOLD),
    ]
    with pytest.raises(UsageError, match="mix"):
        stance_table(mixed, corpus, "Target")
