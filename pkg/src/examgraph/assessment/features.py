"""The seven measurable item features that proxy difficulty, plus Bloom
level classification of question stems."""

from __future__ import annotations

from enum import Enum, IntEnum
from typing import Callable, Iterable

from ..errors import MalformedItem
from ..kg import KnowledgeGraph, NodeKind
from ..textutils import cosine_similarity, tokenize

SimilarityFn = Callable[[str, str], float]

DEFAULT_TAU = 0.4  # minimum similarity to the key for a distractor to count as plausible


class BloomLevel(IntEnum):
    REMEMBER = 1
    UNDERSTAND = 2
    APPLY = 3
    ANALYZE = 4
    EVALUATE = 5
    CREATE = 6


class FeatureId(Enum):
    STEM_LENGTH = "stem_length"
    VOCAB_DENSITY = "vocab_density"
    COGNITIVE_LEVEL = "cognitive_level"
    OPTION_LENGTH = "option_length"
    OPTION_SIMILARITY = "option_similarity"
    STEM_OPTION_OVERLAP = "stem_option_overlap"
    PLAUSIBLE_DISTRACTORS = "plausible_distractors"


FEATURE_ORDER = tuple(FeatureId)

DEFAULT_BLOOM_VERBS: dict[BloomLevel, frozenset[str]] = {
    BloomLevel.REMEMBER: frozenset({"define", "list", "name", "recall"}),
    BloomLevel.UNDERSTAND: frozenset({"explain", "paraphrase", "summarize"}),
    BloomLevel.APPLY: frozenset({"apply", "solve", "use", "compute"}),
    BloomLevel.ANALYZE: frozenset({"analyze", "compare", "differentiate"}),
    BloomLevel.EVALUATE: frozenset({"judge", "assess", "justify", "critique"}),
    BloomLevel.CREATE: frozenset({"design", "compose", "propose", "construct"}),
}


def classify_bloom(stem: str,
                   verb_lexicon: dict[BloomLevel, frozenset[str]] | None = None) -> BloomLevel:
    """Highest Bloom level whose verb set appears in the stem; Remember when
    no known verb is present."""
    verbs = verb_lexicon or DEFAULT_BLOOM_VERBS
    tokens = set(tokenize(stem))
    best = BloomLevel.REMEMBER
    for level in BloomLevel:
        if tokens & verbs.get(level, frozenset()):
            best = level
    return best


def build_lexicon(graph: KnowledgeGraph) -> frozenset[str]:
    """Domain term set from the graph's entity and concept labels: each
    full label plus its constituent words."""
    terms: set[str] = set()
    for node in graph.nodes():
        if node.kind == NodeKind.HIERARCHY:
            continue
        terms.add(node.label)
        terms.update(tokenize(node.label))
    return frozenset(terms)


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def measure_features(item, lexicon: frozenset[str] | set[str],
                     similarity: SimilarityFn = cosine_similarity,
                     tau: float = DEFAULT_TAU,
                     bloom_verbs: dict[BloomLevel, frozenset[str]] | None = None,
                     ) -> dict[FeatureId, float]:
    """Raw feature values for a four-option item.

    ``item`` needs ``stem``, ``options`` (exactly four) and ``answer_index``
    attributes; anything shaped differently raises MalformedItem.
    """
    stem = getattr(item, "stem", "") or ""
    options = list(getattr(item, "options", ()) or ())
    answer_index = getattr(item, "answer_index", None)
    if not stem.strip():
        raise MalformedItem("item stem is empty")
    if len(options) != 4 or any(not isinstance(o, str) or not o.strip() for o in options):
        raise MalformedItem(f"item must have exactly 4 non-empty options, got {len(options)}")
    if answer_index not in (0, 1, 2, 3):
        raise MalformedItem(f"answer_index must be 0..3, got {answer_index!r}")

    stem_tokens = tokenize(stem)
    density = (
        sum(1 for t in stem_tokens if t in lexicon) / len(stem_tokens)
        if stem_tokens else 0.0
    )
    pair_sims = [
        similarity(options[i], options[j])
        for i in range(4) for j in range(i + 1, 4)
    ]
    key = options[answer_index]
    plausible = sum(
        1 for i, option in enumerate(options)
        if i != answer_index and similarity(option, key) >= tau
    )
    return {
        FeatureId.STEM_LENGTH: float(len(stem.split())),
        FeatureId.VOCAB_DENSITY: density,
        FeatureId.COGNITIVE_LEVEL: float(classify_bloom(stem, bloom_verbs)),
        FeatureId.OPTION_LENGTH: _mean(len(o.split()) for o in options),
        FeatureId.OPTION_SIMILARITY: _mean(pair_sims),
        FeatureId.STEM_OPTION_OVERLAP: _mean(similarity(stem, o) for o in options),
        FeatureId.PLAUSIBLE_DISTRACTORS: float(plausible),
    }
