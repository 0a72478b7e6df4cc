"""Subjective-rating analytics: MOS aggregation, reliability and
group-difference tests, and the structured study reports."""

from .inference import (
    TestResult,
    anova_oneway,
    cliffs_delta,
    cronbach_alpha,
    holm_adjust,
    kruskal_wallis,
    mann_whitney,
    shapiro_wilk,
    tukey_hsd,
    welch_t,
)
from .mos import (
    DIMENSIONS,
    LABEL_DIMENSIONS,
    MosLabel,
    RatingRecord,
    aggregate_all,
    aggregate_mos,
    likert_to_vmaf,
    read_rating_csv,
    screen_participants,
    write_rating_csv,
)
from .report import compression_effect_report, environment_effect_report

__all__ = [
    "TestResult",
    "anova_oneway",
    "cliffs_delta",
    "cronbach_alpha",
    "holm_adjust",
    "kruskal_wallis",
    "mann_whitney",
    "shapiro_wilk",
    "tukey_hsd",
    "welch_t",
    "DIMENSIONS",
    "LABEL_DIMENSIONS",
    "MosLabel",
    "RatingRecord",
    "aggregate_all",
    "aggregate_mos",
    "likert_to_vmaf",
    "read_rating_csv",
    "screen_participants",
    "write_rating_csv",
    "compression_effect_report",
    "environment_effect_report",
]
