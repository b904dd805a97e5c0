"""Shared test fixtures: deterministic synthetic corpora with disjoint
vocabularies, rich enough to fill multi-chapter blueprints."""

from __future__ import annotations

from examgraph.ingestion import RuleExtractor, SourceDocument, ingest_document
from examgraph.kg import GraphRegistry

# Distinct roots per subject keep vocabularies fully disjoint.
ROOTS_A = ["bor", "cal", "dor", "fen", "gal", "hul", "jar", "kel",
           "lim", "mor", "nov", "pex"]
ROOTS_B = ["qua", "rus", "sil", "tam", "urn", "vex", "wol", "yar",
           "zel", "osk", "ibex", "ulm"]

FACT_SUFFIXES = ["ite", "ium", "ase", "oid", "ene"]
CONCEPTS_PER_CHAPTER = 4


def corpus_documents(subject: str, roots: list[str], chapters: int = 3
                     ) -> tuple[list[SourceDocument], dict, set]:
    """One document per chapter; each chapter holds four concepts with five
    interlinked member facts. Returns (documents, hypernym lexicon,
    vocabulary of every label word used)."""
    lexicon: dict[str, list[str]] = {}
    vocabulary: set[str] = set()
    documents = []
    for c in range(chapters):
        chapter_roots = roots[c * CONCEPTS_PER_CHAPTER:(c + 1) * CONCEPTS_PER_CHAPTER]
        assert len(chapter_roots) == CONCEPTS_PER_CHAPTER, "not enough roots"
        sentences = []
        fact_sets = []
        for root in chapter_roots:
            concept = f"{root}lore"
            facts = [f"{root}{suffix}" for suffix in FACT_SUFFIXES]
            fact_sets.append(facts)
            vocabulary.add(concept)
            vocabulary.update(facts)
            for fact in facts:
                lexicon[fact] = [concept]
            hub = facts[0]
            for other in facts[1:]:
                sentences.append(f"The {hub} supports the {other}.")
            sentences.append(f"The {facts[1]} needs the {facts[2]}.")
            sentences.append(f"The {facts[3]} affects the {hub}.")
        for j in range(CONCEPTS_PER_CHAPTER):
            sentences.append(
                f"The {fact_sets[j][0]} affects the "
                f"{fact_sets[(j + 1) % CONCEPTS_PER_CHAPTER][0]}.")
        # two paragraphs so segmentation has something to do
        half = len(sentences) // 2
        body = " ".join(sentences[:half]) + "\n\n" + " ".join(sentences[half:])
        documents.append(SourceDocument(
            doc_id=f"{subject}-doc{c + 1}",
            subject=subject,
            chapter_path=[f"Ch {c + 1}"],
            body=body,
            format="plain",
        ))
    return documents, lexicon, vocabulary


def build_registry(subject: str = "envsci", roots: list[str] | None = None,
                   chapters: int = 3, registry: GraphRegistry | None = None
                   ) -> tuple[GraphRegistry, dict, set]:
    """Ingest a full synthetic corpus; returns (registry, lexicon, vocab)."""
    if registry is None:  # empty registries are falsy, "or" would drop them
        registry = GraphRegistry()
    documents, lexicon, vocabulary = corpus_documents(
        subject, roots or ROOTS_A, chapters)
    extractor = RuleExtractor(lexicon)
    for i, document in enumerate(documents):
        ingest_document(registry, document, extractor, append=(i > 0))
    return registry, lexicon, vocabulary


def blueprint_dict(subject: str = "envsci", chapters: int = 3,
                   basic: int = 4, applied: int = 3, comprehensive: int = 3
                   ) -> dict:
    per = basic + applied + comprehensive
    return {
        "subject": subject,
        "sections": [
            {
                "chapter": f"Ch {c + 1}",
                "count": per,
                "tiers": {"basic": basic, "applied": applied,
                          "comprehensive": comprehensive},
            }
            for c in range(chapters)
        ],
    }
