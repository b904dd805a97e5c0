"""Concept and fact ranking over a subject graph.

The score update is the unnormalized recurrence

    PR(v) = (1 - d) + d * sum(PR(u) / outdeg(u) for u in In(v))

iterated to a fixed point from an all-ones start. There is no 1/N factor;
scores are not a probability distribution and are bounded below by (1 - d).
Nodes without outbound edges contribute to no one (their mass leaks), which
keeps the recurrence well defined. Every edge kind counts as one directed
link; parallel edges contribute once each.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyGraph, NotAConcept, NotAHierarchyNode
from .kg import EdgeKind, KnowledgeGraph, NodeKind


@dataclass
class PageRankConfig:
    damping: float = 0.85
    tol: float = 1e-9
    max_iter: int = 1000

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValueError(f"damping must be in (0, 1), got {self.damping}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class PageRankResult:
    scores: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = False

    def __getitem__(self, node_id: str) -> float:
        return self.scores[node_id]


def pagerank(graph: KnowledgeGraph, config: PageRankConfig | None = None) -> PageRankResult:
    """Fixed-point scores for every node; deterministic for a given graph
    and config (fixed node order, fixed summation order)."""
    config = config or PageRankConfig()
    node_ids = sorted(n.id for n in graph.nodes())
    if not node_ids:
        raise EmptyGraph(f"graph {graph.subject!r} has no nodes")

    out_degree = {nid: 0 for nid in node_ids}
    incoming: dict[str, list[str]] = {nid: [] for nid in node_ids}
    for edge in graph.edges():
        out_degree[edge.src] += 1
        incoming[edge.dst].append(edge.src)
    for sources in incoming.values():
        sources.sort()

    d = config.damping
    base = 1.0 - d
    scores = {nid: 1.0 for nid in node_ids}
    iterations = 0
    converged = False
    while iterations < config.max_iter:
        iterations += 1
        new_scores = {}
        delta = 0.0
        for nid in node_ids:
            total = 0.0
            for src in incoming[nid]:
                total += scores[src] / out_degree[src]
            value = base + d * total
            new_scores[nid] = value
            change = abs(value - scores[nid])
            if change > delta:
                delta = change
        scores = new_scores
        if delta < config.tol:
            converged = True
            break
    return PageRankResult(scores=scores, iterations=iterations, converged=converged)


def _chapter_and_descendants(graph: KnowledgeGraph, chapter: str) -> set[str]:
    # part_of edges run child -> parent, so descendants arrive via in-edges
    members = {chapter}
    stack = [chapter]
    while stack:
        current = stack.pop()
        for edge in graph.in_edges(current):
            if edge.kind == EdgeKind.PART_OF and edge.src not in members:
                members.add(edge.src)
                stack.append(edge.src)
    return members


def rank_chapter_concepts(graph: KnowledgeGraph, chapter: str,
                          config: PageRankConfig | None = None,
                          scores: PageRankResult | None = None) -> list[tuple[str, float]]:
    """Concepts filed under a chapter (or its nested sub-chapters), highest
    score first; ties break on ascending node id."""
    node = graph.node(chapter)
    if node.kind != NodeKind.HIERARCHY:
        raise NotAHierarchyNode(f"{chapter!r} is a {node.kind.value} node")
    chapters = _chapter_and_descendants(graph, chapter)
    concept_ids = {
        edge.src
        for ch in chapters
        for edge in graph.in_edges(ch)
        if edge.kind == EdgeKind.INCLUDE_IN
    }
    if not concept_ids:
        return []
    result = scores or pagerank(graph, config)
    ranked = [(cid, result.scores[cid]) for cid in concept_ids]
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))
    return ranked


def rank_concept_facts(graph: KnowledgeGraph, concept: str, top_m: int,
                       config: PageRankConfig | None = None,
                       scores: PageRankResult | None = None) -> list[tuple[str, float]]:
    """Text entities tied to a concept by is_a edges, ranked by the same
    whole-graph scores, truncated to the top ``top_m``."""
    node = graph.node(concept)
    if node.kind != NodeKind.CONCEPT:
        raise NotAConcept(f"{concept!r} is a {node.kind.value} node")
    if top_m < 1:
        raise ValueError(f"top_m must be >= 1, got {top_m}")
    fact_ids = {
        edge.src for edge in graph.in_edges(concept) if edge.kind == EdgeKind.IS_A
    }
    if not fact_ids:
        return []
    result = scores or pagerank(graph, config)
    ranked = [(fid, result.scores[fid]) for fid in fact_ids]
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))
    return ranked[:top_m]
