"""Batch refinement of sampled LLM generations.

Scores every candidate on semantic stability, pairwise entailment and
inter-sample uncertainty, fuses the scaled scores with simplex-constrained
weights, and selects the best candidate per input. See the `refine` CLI.
"""
from .core import (
    Candidate,
    CandidateGroup,
    ExtractionRule,
    RawPrediction,
    ReferenceRecord,
    ScoreVector,
    dedup,
    extract_answer,
    normalize_answer,
)
from .fusion import Coefficients, ScalingFactors, fit_scaling, fuse, select, sigmoid_scale
from .scoring import (
    DistanceMetric,
    LengthPenaltyConfig,
    UncertaintyConfig,
    entailment_scores,
    knn,
    length_penalty,
    pairwise_distances,
    stability_scores,
    uncertainty_scores,
)
from .tuning import grid_search, sensitivity_sweep, simplex_grid

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "CandidateGroup",
    "Coefficients",
    "DistanceMetric",
    "ExtractionRule",
    "LengthPenaltyConfig",
    "RawPrediction",
    "ReferenceRecord",
    "ScalingFactors",
    "ScoreVector",
    "UncertaintyConfig",
    "dedup",
    "entailment_scores",
    "extract_answer",
    "fit_scaling",
    "fuse",
    "grid_search",
    "knn",
    "length_penalty",
    "normalize_answer",
    "pairwise_distances",
    "select",
    "sensitivity_sweep",
    "sigmoid_scale",
    "simplex_grid",
    "stability_scores",
    "uncertainty_scores",
]
