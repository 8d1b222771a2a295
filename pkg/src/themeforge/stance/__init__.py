"""Stance detection: mention retrieval, classification, evaluation."""

from .classify import (
    RecordOrigin,
    StanceLabel,
    StanceRecord,
    build_stance_prompt,
    classify_stance,
    parse_stance_label,
)
from .evaluate import (
    StanceEvalConfig,
    StanceTableRow,
    accuracy,
    read_gold_csv,
    soft_accuracy,
    stance_table,
    write_stance_table_csv,
)
from .matching import (
    DEFAULT_THRESHOLD,
    MentionSpan,
    RelevanceResult,
    TargetSpec,
    USING_NATIVE_KERNEL,
    find_mentions,
    fold,
    load_targets,
    select_relevant_docs,
)

__all__ = [
    "DEFAULT_THRESHOLD",
    "MentionSpan",
    "RecordOrigin",
    "RelevanceResult",
    "StanceEvalConfig",
    "StanceLabel",
    "StanceRecord",
    "StanceTableRow",
    "TargetSpec",
    "USING_NATIVE_KERNEL",
    "accuracy",
    "build_stance_prompt",
    "classify_stance",
    "find_mentions",
    "fold",
    "load_targets",
    "parse_stance_label",
    "read_gold_csv",
    "select_relevant_docs",
    "soft_accuracy",
    "stance_table",
    "write_stance_table_csv",
]
