"""Question candidates: the item type, the deterministic template
generator, and the LLM-backed generator with its strict reply contract.

The template generator builds stems and option scaffolds whose measured
feature profile lands inside each tier's target band under the default
rubric thresholds; the evaluation gate still has the final say.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Protocol

from ..assessment import BloomLevel, DifficultyTier, bloom_profile
from ..errors import GeneratorFailure, MalformedCandidate
from ..kg import KnowledgeGraph, NodeKind
from ..ranking import PageRankResult, pagerank, rank_chapter_concepts, rank_concept_facts
from ..textutils import normalize_label
from .material import MaterialBundle

# Bloom level used when generating for each tier; the cognitive-level
# feature then rates 1/2/3 respectively under the default cuts.
DEFAULT_TIER_BLOOM = {
    DifficultyTier.BASIC_RECALL: BloomLevel.REMEMBER,
    DifficultyTier.APPLIED_UNDERSTANDING: BloomLevel.APPLY,
    DifficultyTier.COMPREHENSIVE_ANALYSIS: BloomLevel.EVALUATE,
}


@dataclass
class Provenance:
    subject: str
    concept: str
    facts: list[str]
    chapter: str

    def to_dict(self) -> dict:
        return {"subject": self.subject, "concept": self.concept,
                "facts": list(self.facts), "chapter": self.chapter}

    @classmethod
    def from_dict(cls, data: dict) -> "Provenance":
        return cls(subject=data["subject"], concept=data["concept"],
                   facts=list(data["facts"]), chapter=data["chapter"])


@dataclass
class QuestionItem:
    id: str
    stem: str
    options: list[str]
    answer_index: int
    bloom: BloomLevel
    tier: DifficultyTier
    provenance: Provenance | None = None
    ratings: dict = field(default_factory=dict)
    difficulty: float | None = None

    def to_payload(self) -> dict:
        payload = {
            "id": self.id,
            "stem": self.stem,
            "options": list(self.options),
            "answer_index": self.answer_index,
            "bloom": self.bloom.name.lower(),
            "tier": self.tier.value,
        }
        if self.provenance is not None:
            payload["provenance"] = self.provenance.to_dict()
        return payload

    @classmethod
    def from_payload(cls, data: dict) -> "QuestionItem":
        return cls(
            id=data.get("id", ""),
            stem=data["stem"],
            options=list(data["options"]),
            answer_index=int(data["answer_index"]),
            bloom=BloomLevel[data.get("bloom", "remember").upper()],
            tier=DifficultyTier(data.get("tier", "basic")),
            provenance=(Provenance.from_dict(data["provenance"])
                        if "provenance" in data else None),
        )


class Generator(Protocol):
    def generate(self, bundle: MaterialBundle, tier: DifficultyTier,
                 bloom: BloomLevel, attempt: int) -> QuestionItem: ...


def generate_candidate(bundle: MaterialBundle, tier: DifficultyTier,
                       bloom: BloomLevel, generator: Generator,
                       attempt: int, subject: str = "") -> QuestionItem:
    """Run the generator and enforce the structural item contract:
    non-empty stem, exactly four pairwise-distinct options, valid key."""
    try:
        item = generator.generate(bundle, tier, bloom, attempt)
    except (GeneratorFailure, MalformedCandidate):
        raise
    except Exception as exc:
        raise GeneratorFailure(f"generator raised: {exc}") from exc
    if not item.stem or not item.stem.strip():
        raise MalformedCandidate("candidate stem is empty")
    if len(item.options) != 4 or any(not o or not o.strip() for o in item.options):
        raise MalformedCandidate(
            f"candidate must have 4 non-empty options, got {len(item.options)}")
    if len({normalize_label(o) for o in item.options}) != 4:
        raise MalformedCandidate("candidate options must be pairwise distinct")
    if item.answer_index not in (0, 1, 2, 3):
        raise MalformedCandidate(f"bad answer_index {item.answer_index!r}")
    item.provenance = Provenance(
        subject=subject,
        concept=bundle.concept_id,
        facts=bundle.fact_ids,
        chapter=bundle.chapter_id,
    )
    return item


# --- deterministic template generator ---

_BASIC_STEMS = (
    "Which of the following is a {concept}?",
    "Name the option that is a {concept}.",
    "Which option below names a {concept} from {chapter}?",
    "Recall {chapter}: which one of these is a {concept}?",
)

_APPLIED_STEMS = (
    "Apply the definition of {concept}: using what {chapter} says about "
    "{concept}, work out which option is an instance of {concept}.",
    "Use the definition of {concept}: given what {chapter} says about "
    "{concept}, select the option that works as an instance of {concept}.",
    "Solve this selection task about {concept}: relying on what {chapter} "
    "teaches about {concept}, decide which option is an actual instance of "
    "{concept}.",
    "Apply what {chapter} covers about {concept}: compute which single "
    "option counts as an instance of {concept}, keeping the scope of "
    "{concept} in mind.",
)

_COMPREHENSIVE_STEMS = (
    "Assess the options below against the account of {concept} given in "
    "{chapter}. Remember that {narration}. Justify which single option best "
    "exemplifies {concept} under that account, weighing every candidate "
    "against the meaning of {concept} before deciding.",
    "Judge each option against the treatment of {concept} in {chapter}. "
    "Bear in mind that {narration}. Then justify which single option best "
    "captures {concept}, weighing every candidate against the full meaning "
    "of {concept} before deciding.",
    "Critique the candidate answers in light of how {chapter} frames "
    "{concept}. Note that {narration}. Justify which single option stands "
    "as the best example of {concept}, measuring each candidate against the "
    "meaning of {concept}.",
    "Justify a choice among the options below given the role of {concept} "
    "in {chapter}. Keep in mind that {narration}. Assess every candidate "
    "against the established meaning of {concept} and settle on the single "
    "best example of {concept}.",
)


def _wrap_option(label: str, tier: DifficultyTier, concept: str, chapter: str) -> str:
    if tier == DifficultyTier.BASIC_RECALL:
        return label
    if tier == DifficultyTier.APPLIED_UNDERSTANDING:
        return f"the {label} scenario in practice"
    return f"the {label} case, which illustrates {concept} as treated in {chapter}"


class TemplateGenerator:
    """Offline generator: per (tier, bloom) a fixed stem template family,
    the key drawn from the bundle's best fact, distractors from sibling
    concepts in the same chapter (falling back to the rest of the graph).

    Deterministic given the seed; the seed drives option order only.
    The graph is treated as immutable while the generator is alive.
    """

    def __init__(self, graph: KnowledgeGraph, seed: int = 0):
        self.graph = graph
        self.seed = seed
        self._scores: PageRankResult | None = None
        self._chapter_pools: dict[str, list[tuple[str, list[str]]]] = {}

    def _pagerank(self) -> PageRankResult:
        if self._scores is None:
            self._scores = pagerank(self.graph)
        return self._scores

    def _chapter_fact_pools(self, chapter_id: str) -> list[tuple[str, list[str]]]:
        """Per chapter concept (rank order): (concept id, fact labels in
        rank order)."""
        if chapter_id not in self._chapter_pools:
            pools: list[tuple[str, list[str]]] = []
            try:
                ranked = rank_chapter_concepts(self.graph, chapter_id,
                                               scores=self._pagerank())
            except Exception:
                ranked = []
            for concept_id, _ in ranked:
                facts = rank_concept_facts(self.graph, concept_id, 5,
                                           scores=self._pagerank())
                pools.append((concept_id,
                              [self.graph.node(fid).label for fid, _ in facts]))
            self._chapter_pools[chapter_id] = pools
        return self._chapter_pools[chapter_id]

    def _global_fact_labels(self) -> list[str]:
        scores = self._pagerank().scores
        facts = [n for n in self.graph.nodes(NodeKind.TEXT)]
        facts.sort(key=lambda n: (-scores[n.id], n.id))
        return [n.label for n in facts]

    def _distractors(self, bundle: MaterialBundle, key_label: str) -> list[str]:
        banned = {normalize_label(label) for label in bundle.fact_labels}
        banned.add(normalize_label(key_label))
        chosen: list[str] = []

        def take(label: str) -> bool:
            norm = normalize_label(label)
            if norm in banned:
                return False
            banned.add(norm)
            chosen.append(label)
            return len(chosen) == 3

        sibling_pools = [
            labels for concept_id, labels in self._chapter_fact_pools(bundle.chapter_id)
            if concept_id != bundle.concept_id
        ]
        # breadth-first: every sibling's best fact before anyone's second
        depth = max((len(p) for p in sibling_pools), default=0)
        for level in range(depth):
            for pool in sibling_pools:
                if level < len(pool) and take(pool[level]):
                    return chosen
        for label in self._global_fact_labels():
            if take(label):
                return chosen
        raise GeneratorFailure(
            f"not enough distinct material for distractors around "
            f"{bundle.concept_label!r} (found {len(chosen)})")

    def _narration(self, bundle: MaterialBundle, key_label: str) -> str:
        key_norm = normalize_label(key_label)
        picked: list[tuple[str, str, str]] = []
        for h, r, t in bundle.sub_connections:
            if key_norm in (normalize_label(h), normalize_label(t)):
                continue
            picked.append((h, r, t))
            if len(picked) == 2:
                break
        for label in bundle.fact_labels[1:]:
            if len(picked) >= 2:
                break
            if normalize_label(label) != key_norm:
                picked.append((label, "belongs with", bundle.concept_label))
        while len(picked) < 2:
            picked.append((bundle.concept_label, "anchors", bundle.chapter_label))
        return " and that ".join(f"{h} {r} {t}" for h, r, t in picked[:2])

    def generate(self, bundle: MaterialBundle, tier: DifficultyTier,
                 bloom: BloomLevel, attempt: int) -> QuestionItem:
        if not bundle.facts:
            raise GeneratorFailure(f"bundle for {bundle.concept_label!r} has no facts")
        concept = bundle.concept_label
        chapter = bundle.chapter_label
        key_label = bundle.fact_labels[0]

        if tier == DifficultyTier.BASIC_RECALL:
            stems = _BASIC_STEMS
        elif tier == DifficultyTier.APPLIED_UNDERSTANDING:
            stems = _APPLIED_STEMS
        else:
            stems = _COMPREHENSIVE_STEMS
        variant = attempt % len(stems)
        stem = stems[variant].format(
            concept=concept, chapter=chapter,
            narration=self._narration(bundle, key_label),
        )

        distractors = self._distractors(bundle, key_label)
        options = [_wrap_option(lbl, tier, concept, chapter)
                   for lbl in (key_label, *distractors)]
        rng = random.Random(
            f"{self.seed}|{bundle.concept_id}|{tier.value}|{bloom.name}|{attempt}")
        order = list(range(4))
        rng.shuffle(order)
        shuffled = [options[i] for i in order]
        answer_index = order.index(0)
        return QuestionItem(
            id=f"{tier.value}-{bundle.concept_id}-v{variant}",
            stem=stem,
            options=shuffled,
            answer_index=answer_index,
            bloom=bloom,
            tier=tier,
        )


# --- LLM-backed generator ---

GENERATION_SYSTEM_PROMPT = (
    "You write four-option multiple-choice exam questions from "
    "knowledge-graph facts. Reply with exactly one JSON object of the form "
    '{"stem": "...", "options": ["...", "...", "...", "..."], '
    '"answer_index": 0} and nothing else.'
)


class LLMGenerator:
    """Generator backed by a chat-completion callable.

    The request serializes the bundle's fact triples as ``h r t`` lines plus
    the target feature profile; replies that do not match the required JSON
    shape are rejected as MalformedCandidate.
    """

    def __init__(self, complete_fn: Callable[[str, str], str]):
        self._complete = complete_fn

    def generate(self, bundle: MaterialBundle, tier: DifficultyTier,
                 bloom: BloomLevel, attempt: int) -> QuestionItem:
        profile = bloom_profile(bloom)
        lines = [f"{h} {r} {t}" for h, r, t in bundle.sub_connections]
        if not lines:
            lines = [f"{label} is_a {bundle.concept_label}"
                     for label in bundle.fact_labels]
        prompt = (
            "Facts:\n" + "\n".join(lines) + "\n"
            f"Concept: {bundle.concept_label}\n"
            f"Chapter: {bundle.chapter_label}\n"
            f"Cognitive level: {bloom.name.title()}\n"
            "Target feature profile (1=low, 3=high): "
            + json.dumps({f.value: r for f, r in profile.items()}) + "\n"
            f"Attempt: {attempt}\n"
            "Write one question."
        )
        try:
            reply = self._complete(GENERATION_SYSTEM_PROMPT, prompt)
        except Exception as exc:
            raise GeneratorFailure(f"generation backend failed: {exc}") from exc
        return _parse_item_reply(reply, tier, bloom)


def _parse_item_reply(reply: str, tier: DifficultyTier, bloom: BloomLevel) -> QuestionItem:
    try:
        data = json.loads(reply)
    except json.JSONDecodeError as exc:
        raise MalformedCandidate(f"reply is not JSON: {exc.msg}") from exc
    if (not isinstance(data, dict)
            or not isinstance(data.get("stem"), str)
            or not isinstance(data.get("options"), list)
            or not isinstance(data.get("answer_index"), int)):
        raise MalformedCandidate(
            'reply must be {"stem": str, "options": [4 strings], "answer_index": int}')
    return QuestionItem(
        id="",
        stem=data["stem"],
        options=[str(o) for o in data["options"]],
        answer_index=data["answer_index"],
        bloom=bloom,
        tier=tier,
    )
