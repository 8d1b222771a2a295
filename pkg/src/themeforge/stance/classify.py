"""Three-class stance classification through the generation backend."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from ..corpus import TranscriptDoc
from ..errors import ClassificationError
from ..gateway import (
    BackendDescriptor,
    DEFAULT_CONFIG,
    GatewayConfig,
    GenerationRequest,
    generate,
)
from .matching import TargetSpec


class StanceLabel(Enum):
    AGAINST = "Against"
    FAVOR = "Favor"
    NEUTRAL = "Neutral"


class RecordOrigin(Enum):
    GOLD = "Gold"
    PREDICTED = "Predicted"


@dataclass(frozen=True)
class StanceRecord:
    doc_id: str
    target_id: str
    label: StanceLabel
    origin: RecordOrigin


def build_stance_prompt(doc: TranscriptDoc, target: TargetSpec) -> str:
    return (
        f"You are given a transcript of a video that mentions {target.display_name}. "
        f"Classify the stance of the video toward {target.display_name} as one of: "
        f"Against, Favor, Neutral. Respond with exactly one word.\n"
        f"\n"
        f"{doc.transcript_text}"
    )


_LABEL_SYNONYMS = {
    "against": StanceLabel.AGAINST,
    "negative": StanceLabel.AGAINST,
    "favor": StanceLabel.FAVOR,
    "favorable": StanceLabel.FAVOR,
    "favourable": StanceLabel.FAVOR,
    "positive": StanceLabel.FAVOR,
    "neutral": StanceLabel.NEUTRAL,
}

_WORD_RE = re.compile(r"[a-z]+")


def parse_stance_label(completion: str) -> StanceLabel | None:
    """Tolerant single-label parse; None when no unique label is present."""
    words = _WORD_RE.findall(completion.casefold())
    labels = {_LABEL_SYNONYMS[w] for w in words if w in _LABEL_SYNONYMS}
    if len(labels) == 1:
        return labels.pop()
    return None


def classify_stance(
    doc: TranscriptDoc,
    target: TargetSpec,
    backend: BackendDescriptor,
    config: GatewayConfig = DEFAULT_CONFIG,
) -> StanceRecord:
    """One predicted label per (document, target); retries a bad parse once."""
    prompt = build_stance_prompt(doc, target)
    raw = ""
    for attempt in range(2):
        # The retry re-asks with a terse reminder appended; a deterministic
        # backend would otherwise return the identical unparseable text.
        suffix = "" if attempt == 0 else "\nAnswer with one word: Against, Favor, or Neutral."
        raw = generate(GenerationRequest(prompt=prompt + suffix), backend, config)
        label = parse_stance_label(raw)
        if label is not None:
            return StanceRecord(
                doc_id=doc.video_id,
                target_id=target.target_id,
                label=label,
                origin=RecordOrigin.PREDICTED,
            )
    raise ClassificationError(
        f"unparseable stance for doc {doc.video_id} target {target.target_id}", raw=raw
    )
