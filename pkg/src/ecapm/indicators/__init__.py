"""Topological, statistical and financial validation indicators."""
from .confusion import (
    ClassifierScores,
    ConfusionCounts,
    classifier_scores,
    confusion,
    expected_confusion,
    mecapm_dense_limit_confusion,
)
from .systemic import (
    SystemicnessInputs,
    SystemicnessReport,
    expected_overlaps,
    expected_systemicness_ratio,
    expected_systemicness_ratios,
    overlap_term,
    overlap_terms,
    relative_systemicness,
    systemicness,
    systemicness_report,
    systemicness_sigma_ratio,
    systemicness_sigma_ratios,
    systemicness_variance,
    systemicness_variances,
)
from .topology import (
    AnnReport,
    ExpectedAnn,
    ann_degrees,
    ann_strengths,
    expected_ann,
    expected_degrees,
    mecapm_dense_limit_ann,
)
