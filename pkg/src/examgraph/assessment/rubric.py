"""Difficulty rubric: per-feature low/medium/high ratings, total and
weighted aggregation, tier bands and the evaluation gate.

Each of the seven features is rated 1, 2 or 3 against two configurable cut
points; the total T = sum(d_i) therefore lives in [7, 21]. A weighted sum
D = sum(w_i * d_i) is compared against a target D* and accepted when
|D - D*| <= epsilon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from ..errors import AllZeroWeights
from ..textutils import cosine_similarity
from .features import (
    DEFAULT_BLOOM_VERBS,
    DEFAULT_TAU,
    FEATURE_ORDER,
    BloomLevel,
    FeatureId,
    SimilarityFn,
    measure_features,
)

Thresholds = dict[FeatureId, tuple[float, float]]
Ratings = dict[FeatureId, int]
Weights = dict[FeatureId, float]

DEFAULT_THRESHOLDS: Thresholds = {
    FeatureId.STEM_LENGTH: (15.0, 35.0),
    FeatureId.VOCAB_DENSITY: (0.10, 0.30),
    FeatureId.COGNITIVE_LEVEL: (3.0, 5.0),
    FeatureId.OPTION_LENGTH: (4.0, 10.0),
    FeatureId.OPTION_SIMILARITY: (0.25, 0.55),
    FeatureId.STEM_OPTION_OVERLAP: (0.25, 0.55),
    FeatureId.PLAUSIBLE_DISTRACTORS: (2.0, 3.0),
}

UNIT_WEIGHTS: Weights = {f: 1.0 for f in FEATURE_ORDER}

DEFAULT_EPSILON = 2.0


class DifficultyTier(Enum):
    BASIC_RECALL = "basic"
    APPLIED_UNDERSTANDING = "applied"
    COMPREHENSIVE_ANALYSIS = "comprehensive"


@dataclass(frozen=True)
class TierSpec:
    target: float
    band: tuple[int, int]


# Equal partition of the [7, 21] total-difficulty range across three tiers.
DEFAULT_TIERS: dict[DifficultyTier, TierSpec] = {
    DifficultyTier.BASIC_RECALL: TierSpec(9.0, (7, 11)),
    DifficultyTier.APPLIED_UNDERSTANDING: TierSpec(14.0, (12, 16)),
    DifficultyTier.COMPREHENSIVE_ANALYSIS: TierSpec(19.0, (17, 21)),
}

# Table-driven encoding of how feature demands grow across Bloom levels.
_BLOOM_PROFILE_ROWS: dict[FeatureId, tuple[int, int, int, int, int, int]] = {
    FeatureId.STEM_LENGTH: (1, 2, 2, 3, 3, 3),
    FeatureId.VOCAB_DENSITY: (1, 2, 2, 3, 3, 3),
    FeatureId.COGNITIVE_LEVEL: (1, 1, 2, 2, 3, 3),
    FeatureId.OPTION_LENGTH: (1, 1, 2, 3, 3, 3),
    FeatureId.OPTION_SIMILARITY: (1, 2, 2, 3, 3, 3),
    FeatureId.STEM_OPTION_OVERLAP: (1, 2, 2, 3, 3, 3),
    FeatureId.PLAUSIBLE_DISTRACTORS: (1, 2, 2, 3, 3, 3),
}


def bloom_profile(level: BloomLevel) -> Ratings:
    """Expected rating profile for items targeting one Bloom level;
    componentwise non-decreasing as the level rises."""
    return {f: _BLOOM_PROFILE_ROWS[f][level - 1] for f in FEATURE_ORDER}


def validate_thresholds(thresholds: Thresholds) -> Thresholds:
    for feature in FEATURE_ORDER:
        if feature not in thresholds:
            raise ValueError(f"missing thresholds for {feature.value}")
        cut1, cut2 = thresholds[feature]
        if not cut1 < cut2:
            raise ValueError(
                f"{feature.value}: cut points must satisfy cut1 < cut2, got {cut1}, {cut2}")
    return thresholds


def rate_features(measurements: dict[FeatureId, float],
                  thresholds: Thresholds | None = None) -> Ratings:
    """Map raw values onto ratings: 1 below cut1, 2 in [cut1, cut2),
    3 at or above cut2."""
    thresholds = validate_thresholds(thresholds or DEFAULT_THRESHOLDS)
    ratings: Ratings = {}
    for feature in FEATURE_ORDER:
        raw = measurements[feature]
        cut1, cut2 = thresholds[feature]
        ratings[feature] = 1 if raw < cut1 else (2 if raw < cut2 else 3)
    return ratings


def total_difficulty(ratings: Ratings) -> int:
    """T = sum of the seven feature ratings; always within [7, 21]."""
    return sum(int(ratings[f]) for f in FEATURE_ORDER)


def weighted_difficulty(ratings: Ratings, weights: Weights | None = None) -> float:
    """Weighted total sum(w_i * d_i); equals total_difficulty under unit
    weights."""
    weights = weights or UNIT_WEIGHTS
    for feature in FEATURE_ORDER:
        if weights.get(feature, 0.0) < 0:
            raise ValueError(f"weight for {feature.value} must be >= 0")
    if all(weights.get(f, 0.0) == 0.0 for f in FEATURE_ORDER):
        raise AllZeroWeights("feature weights must not all be zero")
    return sum(weights[f] * ratings[f] for f in FEATURE_ORDER)


@dataclass
class EvaluationResult:
    difficulty: float
    target: float
    epsilon: float
    passed: bool
    breakdown: list[dict] = field(default_factory=list)

    @property
    def ratings(self) -> Ratings:
        return {FeatureId(entry["feature"]): entry["rating"] for entry in self.breakdown}

    def to_dict(self) -> dict:
        return {
            "difficulty": self.difficulty,
            "target": self.target,
            "epsilon": self.epsilon,
            "passed": self.passed,
            "breakdown": self.breakdown,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationResult":
        return cls(
            difficulty=data["difficulty"],
            target=data["target"],
            epsilon=data["epsilon"],
            passed=data["passed"],
            breakdown=list(data["breakdown"]),
        )


def evaluate_item_difficulty(item, target: float, epsilon: float = DEFAULT_EPSILON,
                             weights: Weights | None = None,
                             thresholds: Thresholds | None = None,
                             lexicon: frozenset[str] | set[str] = frozenset(),
                             similarity: SimilarityFn = cosine_similarity,
                             tau: float = DEFAULT_TAU,
                             bloom_verbs: dict[BloomLevel, frozenset[str]] | None = None,
                             ) -> EvaluationResult:
    """Measure, rate and aggregate an item, then gate it against the target:
    pass iff |D - D*| <= epsilon. The breakdown lists every feature's raw
    value, rating, weight and contribution."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    weights = weights or UNIT_WEIGHTS
    measurements = measure_features(item, lexicon, similarity, tau, bloom_verbs)
    ratings = rate_features(measurements, thresholds)
    difficulty = weighted_difficulty(ratings, weights)
    breakdown = [
        {
            "feature": f.value,
            "raw": measurements[f],
            "rating": ratings[f],
            "weight": weights[f],
            "contribution": weights[f] * ratings[f],
        }
        for f in FEATURE_ORDER
    ]
    return EvaluationResult(
        difficulty=difficulty,
        target=target,
        epsilon=epsilon,
        passed=abs(difficulty - target) <= epsilon,
        breakdown=breakdown,
    )


@dataclass
class RubricConfig:
    """Everything the evaluator needs, loadable from one JSON file."""

    thresholds: Thresholds = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    weights: Weights = field(default_factory=lambda: dict(UNIT_WEIGHTS))
    tiers: dict[DifficultyTier, TierSpec] = field(default_factory=lambda: dict(DEFAULT_TIERS))
    epsilon: float = DEFAULT_EPSILON
    tau: float = DEFAULT_TAU
    bloom_verbs: dict[BloomLevel, frozenset[str]] = field(
        default_factory=lambda: dict(DEFAULT_BLOOM_VERBS))

    def __post_init__(self):
        validate_thresholds(self.thresholds)

    def target_for(self, tier: DifficultyTier) -> float:
        return self.tiers[tier].target

    def evaluate(self, item, tier: DifficultyTier,
                 lexicon: frozenset[str] | set[str] = frozenset(),
                 similarity: SimilarityFn = cosine_similarity) -> EvaluationResult:
        return self.evaluate_with_target(item, self.target_for(tier),
                                         lexicon, similarity)

    def evaluate_with_target(self, item, target: float,
                             lexicon: frozenset[str] | set[str] = frozenset(),
                             similarity: SimilarityFn = cosine_similarity,
                             ) -> EvaluationResult:
        return evaluate_item_difficulty(
            item, target, self.epsilon,
            weights=self.weights, thresholds=self.thresholds,
            lexicon=lexicon, similarity=similarity, tau=self.tau,
            bloom_verbs=self.bloom_verbs,
        )

    def to_dict(self) -> dict:
        return {
            "thresholds": {f.value: list(self.thresholds[f]) for f in FEATURE_ORDER},
            "weights": [self.weights[f] for f in FEATURE_ORDER],
            "tiers": {
                tier.value: {"target": spec.target, "band": list(spec.band)}
                for tier, spec in self.tiers.items()
            },
            "epsilon": self.epsilon,
            "tau": self.tau,
            "bloom_verbs": {
                level.name.lower(): sorted(verbs)
                for level, verbs in self.bloom_verbs.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RubricConfig":
        kwargs = {}
        if "thresholds" in data:
            kwargs["thresholds"] = {
                FeatureId(name): (float(lo), float(hi))
                for name, (lo, hi) in data["thresholds"].items()
            }
        if "weights" in data:
            values = [float(w) for w in data["weights"]]
            if len(values) != len(FEATURE_ORDER):
                raise ValueError(f"weights must list {len(FEATURE_ORDER)} values")
            kwargs["weights"] = dict(zip(FEATURE_ORDER, values))
        if "tiers" in data:
            kwargs["tiers"] = {
                DifficultyTier(name): TierSpec(float(spec["target"]),
                                               (int(spec["band"][0]), int(spec["band"][1])))
                for name, spec in data["tiers"].items()
            }
        if "epsilon" in data:
            kwargs["epsilon"] = float(data["epsilon"])
        if "tau" in data:
            kwargs["tau"] = float(data["tau"])
        if "bloom_verbs" in data:
            kwargs["bloom_verbs"] = {
                BloomLevel[name.upper()]: frozenset(verbs)
                for name, verbs in data["bloom_verbs"].items()
            }
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "RubricConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
