from .features import (
    DEFAULT_BLOOM_VERBS,
    DEFAULT_TAU,
    FEATURE_ORDER,
    BloomLevel,
    FeatureId,
    build_lexicon,
    classify_bloom,
    measure_features,
)
from .irt import IrtParams, irt_probability
from .rubric import (
    DEFAULT_EPSILON,
    DEFAULT_THRESHOLDS,
    DEFAULT_TIERS,
    UNIT_WEIGHTS,
    DifficultyTier,
    EvaluationResult,
    RubricConfig,
    TierSpec,
    bloom_profile,
    evaluate_item_difficulty,
    rate_features,
    total_difficulty,
    weighted_difficulty,
)

__all__ = [
    "BloomLevel",
    "DEFAULT_BLOOM_VERBS",
    "DEFAULT_EPSILON",
    "DEFAULT_TAU",
    "DEFAULT_THRESHOLDS",
    "DEFAULT_TIERS",
    "DifficultyTier",
    "EvaluationResult",
    "FEATURE_ORDER",
    "FeatureId",
    "IrtParams",
    "RubricConfig",
    "TierSpec",
    "UNIT_WEIGHTS",
    "bloom_profile",
    "build_lexicon",
    "classify_bloom",
    "evaluate_item_difficulty",
    "irt_probability",
    "measure_features",
    "rate_features",
    "total_difficulty",
    "weighted_difficulty",
]
