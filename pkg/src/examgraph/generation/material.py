"""Question material: for each top-ranked concept of a chapter, its
top-ranked facts plus the fact edges within one hop."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import NoConceptsInChapter
from ..kg import EdgeKind, KnowledgeGraph
from ..ranking import PageRankConfig, pagerank, rank_chapter_concepts, rank_concept_facts


@dataclass
class MaterialBundle:
    concept_id: str
    concept_label: str
    chapter_id: str
    chapter_label: str
    facts: list[tuple[str, str]]  # (node id, label), rank order
    sub_connections: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def fact_ids(self) -> list[str]:
        return [fid for fid, _ in self.facts]

    @property
    def fact_labels(self) -> list[str]:
        return [label for _, label in self.facts]


def _one_hop_fact_triples(graph: KnowledgeGraph, fact_ids: list[str]
                          ) -> list[tuple[str, str, str]]:
    triples: list[tuple[str, str, str]] = []
    seen = set()
    for fid in fact_ids:
        for edge in graph.out_edges(fid) + graph.in_edges(fid):
            if edge.kind != EdgeKind.FACT or edge in seen:
                continue
            seen.add(edge)
            triples.append((
                graph.node(edge.src).label,
                edge.label or "",
                graph.node(edge.dst).label,
            ))
    triples.sort()
    return triples


def assemble_material(graph: KnowledgeGraph, chapter: str,
                      top_concepts: int = 10, top_m_facts: int = 5,
                      config: PageRankConfig | None = None) -> list[MaterialBundle]:
    """Bundles for the chapter's ``top_concepts`` highest-ranked concepts.

    Each bundle carries the concept's ``top_m_facts`` best facts and the
    fact edges one hop from those facts (included unranked).
    """
    if top_concepts < 1 or top_m_facts < 1:
        raise ValueError("top_concepts and top_m_facts must be >= 1")
    scores = pagerank(graph, config)
    concepts = rank_chapter_concepts(graph, chapter, scores=scores)
    if not concepts:
        raise NoConceptsInChapter(
            f"chapter {graph.node(chapter).label!r} has no concepts")
    chapter_label = graph.node(chapter).label
    bundles = []
    for concept_id, _ in concepts[:top_concepts]:
        ranked_facts = rank_concept_facts(graph, concept_id, top_m_facts, scores=scores)
        if not ranked_facts:
            continue
        fact_ids = [fid for fid, _ in ranked_facts]
        bundles.append(MaterialBundle(
            concept_id=concept_id,
            concept_label=graph.node(concept_id).label,
            chapter_id=chapter,
            chapter_label=chapter_label,
            facts=[(fid, graph.node(fid).label) for fid in fact_ids],
            sub_connections=_one_hop_fact_triples(graph, fact_ids),
        ))
    if not bundles:
        raise NoConceptsInChapter(
            f"chapter {chapter_label!r} has concepts but none with facts")
    return bundles
