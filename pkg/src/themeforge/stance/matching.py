"""Fuzzy target-mention retrieval over noisy transcripts.

Transcripts and aliases are folded (case + diacritics) before comparison,
then each alias is slid across same-width token windows and scored with a
normalized indel similarity in [0, 100]. The scoring kernel is compiled
when available, with a pure-Python fallback selected at import.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from ..corpus import Corpus, TranscriptDoc
from ..errors import UsageError

try:
    from ._editdist import indel_similarity

    USING_NATIVE_KERNEL = True
except ImportError:
    from ._editdist_py import indel_similarity

    USING_NATIVE_KERNEL = False

DEFAULT_THRESHOLD = 85.0

_TOKEN_RE = re.compile(r"\S+")


def fold(text: str) -> str:
    """Strip diacritics (NFD + mark removal) and casefold."""
    decomposed = unicodedata.normalize("NFD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return stripped.casefold()


@dataclass(frozen=True)
class TargetSpec:
    target_id: str
    display_name: str
    aliases: tuple[str, ...]
    min_relevant_docs: int = 50

    def __post_init__(self):
        if not self.aliases:
            raise UsageError(f"target {self.target_id} needs at least one alias")
        if self.min_relevant_docs < 0:
            raise UsageError("min_relevant_docs must be >= 0")


@dataclass(frozen=True)
class MentionSpan:
    alias: str
    score: float
    start: int  # character offsets into the original transcript
    end: int
    text: str


def find_mentions(
    doc: TranscriptDoc, target: TargetSpec, threshold: float = DEFAULT_THRESHOLD
) -> list[MentionSpan]:
    """All alias windows scoring at or above the threshold, in text order."""
    if not 0 <= threshold <= 100:
        raise UsageError(f"threshold must be in [0, 100], got {threshold}")
    tokens = [
        (match.group(), match.start(), match.end())
        for match in _TOKEN_RE.finditer(doc.transcript_text)
    ]
    folded = [fold(tok) for tok, _, _ in tokens]
    spans: list[MentionSpan] = []
    for alias in target.aliases:
        alias_folded = " ".join(fold(alias).split())
        width = max(1, len(alias.split()))
        for i in range(len(tokens) - width + 1):
            window = " ".join(folded[i : i + width])
            score = indel_similarity(alias_folded, window)
            if score >= threshold:
                start = tokens[i][1]
                end = tokens[i + width - 1][2]
                spans.append(
                    MentionSpan(
                        alias=alias,
                        score=score,
                        start=start,
                        end=end,
                        text=doc.transcript_text[start:end],
                    )
                )
    spans.sort(key=lambda s: (s.start, -s.score, s.alias))
    return spans


@dataclass(frozen=True)
class RelevanceResult:
    target_id: str
    doc_ids: tuple[str, ...]
    excluded: bool

    @property
    def count(self) -> int:
        return len(self.doc_ids)


def select_relevant_docs(
    corpus: Corpus, target: TargetSpec, threshold: float = DEFAULT_THRESHOLD
) -> RelevanceResult:
    """Docs mentioning the target at least once.

    Targets with fewer relevant docs than their floor are flagged excluded
    (with the count) rather than dropped silently.
    """
    relevant = sorted(
        v.video_id
        for v in corpus.videos.values()
        if v.has_transcript and find_mentions(v, target, threshold)
    )
    return RelevanceResult(
        target_id=target.target_id,
        doc_ids=tuple(relevant),
        excluded=len(relevant) < target.min_relevant_docs,
    )


def load_targets(raw: list[dict]) -> list[TargetSpec]:
    """Parse the targets file: a JSON list of target specs."""
    targets = []
    for entry in raw:
        targets.append(
            TargetSpec(
                target_id=entry["target_id"],
                display_name=entry["display_name"],
                aliases=tuple(entry["aliases"]),
                min_relevant_docs=int(entry.get("min_relevant_docs", 50)),
            )
        )
    return targets
