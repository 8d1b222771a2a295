"""Discourse analytics: frequency, engagement, channel maps, quality."""

from .metrics import (
    ChannelThemeVector,
    EngagementRow,
    FrequencyRow,
    GroupSpec,
    channel_theme_vector,
    engagement_ranking,
    group_mean_ratio,
    local_all,
    news_group,
    political_group,
    round_half_away,
    theme_frequency,
)
from .quality import QualityInput, cluster_quality, quality_report
from .tsne import TsneResult, binary_search_affinities, trustworthiness, tsne

__all__ = [
    "ChannelThemeVector",
    "EngagementRow",
    "FrequencyRow",
    "GroupSpec",
    "QualityInput",
    "TsneResult",
    "binary_search_affinities",
    "channel_theme_vector",
    "cluster_quality",
    "engagement_ranking",
    "group_mean_ratio",
    "local_all",
    "news_group",
    "political_group",
    "quality_report",
    "round_half_away",
    "theme_frequency",
    "trustworthiness",
    "tsne",
]
