"""Per-subject knowledge graphs with typed nodes and edges.

Each subject owns an isolated graph of text entities, concept entities and
hierarchy (chapter) nodes, connected by four edge kinds:

* ``fact``        text -> text, labeled with the relation of an (h, r, t) triple
* ``is_a``        text -> concept (hypernym mapping)
* ``part_of``     hierarchy -> hierarchy (chapter nesting, child to parent)
* ``include_in``  concept -> hierarchy (concept filed under a chapter)

Mutations on one graph are serialized behind a lock (single-writer contract);
reads are lock-free and may run concurrently.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

from ..errors import (
    DuplicateSubject,
    EmptyLabel,
    EmptySubject,
    KindMismatch,
    SubjectCollision,
    UnknownNode,
    UnknownSubject,
)
from ..textutils import normalize_label


class NodeKind(Enum):
    TEXT = "text"
    CONCEPT = "concept"
    HIERARCHY = "hierarchy"


class EdgeKind(Enum):
    FACT = "fact"
    IS_A = "is_a"
    PART_OF = "part_of"
    INCLUDE_IN = "include_in"


# Allowed (source kind, target kind) per edge kind.
_EDGE_TYPING = {
    EdgeKind.FACT: (NodeKind.TEXT, NodeKind.TEXT),
    EdgeKind.IS_A: (NodeKind.TEXT, NodeKind.CONCEPT),
    EdgeKind.PART_OF: (NodeKind.HIERARCHY, NodeKind.HIERARCHY),
    EdgeKind.INCLUDE_IN: (NodeKind.CONCEPT, NodeKind.HIERARCHY),
}


@dataclass
class Node:
    id: str
    kind: NodeKind
    label: str  # normalized form
    raw_labels: set[str] = field(default_factory=set)
    source_refs: list[tuple[str, int]] = field(default_factory=list)


@dataclass(frozen=True)
class Edge:
    kind: EdgeKind
    src: str
    dst: str
    label: str | None = None  # relation label, fact edges only


class KnowledgeGraph:
    """Mutable typed multigraph for one subject."""

    def __init__(self, subject: str):
        self.subject = subject
        self._nodes: dict[str, Node] = {}
        self._by_key: dict[tuple[NodeKind, str], str] = {}
        self._edges: set[Edge] = set()
        self._out: dict[str, list[Edge]] = {}
        self._in: dict[str, list[Edge]] = {}
        self._next_id = 0
        # reentrant so compound mutations (triple = 2 upserts + 1 edge)
        # serialize as one writer operation
        self._write_lock = threading.RLock()

    # -- inspection --

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no node {node_id!r} in graph {self.subject!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def nodes(self, kind: NodeKind | None = None) -> list[Node]:
        ns = self._nodes.values()
        if kind is not None:
            ns = (n for n in ns if n.kind == kind)
        return sorted(ns, key=lambda n: n.id)

    def edges(self, kind: EdgeKind | None = None) -> list[Edge]:
        es = self._edges
        if kind is not None:
            es = (e for e in es if e.kind == kind)
        return sorted(es, key=lambda e: (e.src, e.dst, e.kind.value, e.label or ""))

    def find_node(self, label: str, kind: NodeKind) -> str | None:
        """NodeId for a (normalized) label of the given kind, if present."""
        return self._by_key.get((kind, normalize_label(label)))

    # -- mutation --

    def upsert_entity(self, surface_label: str, kind: NodeKind,
                      source_ref: tuple[str, int] | None = None) -> str:
        """Return the node for this label, creating it if needed.

        Labels that normalize to the same string and share a kind collapse to
        one node; every distinct surface form is retained in ``raw_labels``.
        """
        norm = normalize_label(surface_label)
        if not norm:
            raise EmptyLabel(f"label {surface_label!r} is empty after normalization")
        with self._write_lock:
            node_id = self._by_key.get((kind, norm))
            if node_id is None:
                node_id = f"n{self._next_id}"
                self._next_id += 1
                self._nodes[node_id] = Node(id=node_id, kind=kind, label=norm)
                self._by_key[(kind, norm)] = node_id
            node = self._nodes[node_id]
            node.raw_labels.add(surface_label)
            if source_ref is not None and source_ref not in node.source_refs:
                node.source_refs.append(source_ref)
            return node_id

    def assert_fact_triple(self, head: str, relation: str, tail: str,
                           source_ref: tuple[str, int] | None = None) -> Edge:
        """Store an (h, r, t) triple: head/tail as text entities plus one
        labeled fact edge. Exact duplicates are idempotent."""
        rel = normalize_label(relation)
        if not rel:
            raise EmptyLabel(f"relation {relation!r} is empty after normalization")
        with self._write_lock:
            h = self.upsert_entity(head, NodeKind.TEXT, source_ref)
            t = self.upsert_entity(tail, NodeKind.TEXT, source_ref)
            edge = Edge(EdgeKind.FACT, h, t, rel)
            self._add_edge(edge)
        return edge

    def assert_link(self, kind: EdgeKind, src: str, dst: str) -> Edge:
        """Add a typed structural edge (is_a / part_of / include_in)."""
        if kind == EdgeKind.FACT:
            raise KindMismatch("fact edges are added via assert_fact_triple")
        with self._write_lock:
            src_node = self.node(src)
            dst_node = self.node(dst)
            want_src, want_dst = _EDGE_TYPING[kind]
            if src_node.kind != want_src or dst_node.kind != want_dst:
                raise KindMismatch(
                    f"{kind.value} requires {want_src.value}->{want_dst.value}, "
                    f"got {src_node.kind.value}->{dst_node.kind.value}"
                )
            edge = Edge(kind, src, dst)
            self._add_edge(edge)
        return edge

    def _add_edge(self, edge: Edge) -> None:
        if edge.src not in self._nodes or edge.dst not in self._nodes:
            raise UnknownNode("edge endpoints must exist in this graph")
        with self._write_lock:
            if edge in self._edges:
                return
            self._edges.add(edge)
            self._out.setdefault(edge.src, []).append(edge)
            self._in.setdefault(edge.dst, []).append(edge)

    # -- queries --

    def query_neighbors(self, node_id: str, direction: str = "both",
                        kind_filter: EdgeKind | None = None) -> list[tuple[Edge, Node]]:
        """Incident edges with the node on the far end, deterministically
        ordered by (neighbor id, edge kind, label)."""
        if node_id not in self._nodes:
            raise UnknownNode(f"no node {node_id!r} in graph {self.subject!r}")
        if direction not in ("in", "out", "both"):
            raise ValueError(f"direction must be in/out/both, got {direction!r}")
        found: list[tuple[Edge, Node]] = []
        seen: set[tuple[Edge, str]] = set()  # self-loops are incident once
        if direction in ("out", "both"):
            for e in self._out.get(node_id, ()):
                if kind_filter is None or e.kind == kind_filter:
                    found.append((e, self._nodes[e.dst]))
                    seen.add((e, e.dst))
        if direction in ("in", "both"):
            for e in self._in.get(node_id, ()):
                if (kind_filter is None or e.kind == kind_filter) \
                        and (e, e.src) not in seen:
                    found.append((e, self._nodes[e.src]))
        found.sort(key=lambda pair: (pair[1].id, pair[0].kind.value, pair[0].label or ""))
        return found

    def out_edges(self, node_id: str) -> list[Edge]:
        return list(self._out.get(node_id, ()))

    def in_edges(self, node_id: str) -> list[Edge]:
        return list(self._in.get(node_id, ()))

    def stats(self) -> dict:
        nodes = {k.value: 0 for k in NodeKind}
        for n in self._nodes.values():
            nodes[n.kind.value] += 1
        edges = {k.value: 0 for k in EdgeKind}
        for e in self._edges:
            edges[e.kind.value] += 1
        return {"subject": self.subject, "nodes": nodes, "edges": edges,
                "node_total": len(self._nodes), "edge_total": len(self._edges)}


class GraphRegistry:
    """All subject graphs, keyed by subject label; safe for concurrent
    create/lookup. Cross-subject isolation holds because graphs share no
    state whatsoever."""

    def __init__(self):
        self._graphs: dict[str, KnowledgeGraph] = {}
        self._lock = threading.Lock()

    def create(self, subject: str) -> KnowledgeGraph:
        if not subject or not subject.strip():
            raise EmptySubject("subject label must be non-empty")
        with self._lock:
            if subject in self._graphs:
                raise DuplicateSubject(f"subject {subject!r} already registered")
            graph = KnowledgeGraph(subject)
            self._graphs[subject] = graph
            return graph

    def get(self, subject: str) -> KnowledgeGraph:
        try:
            return self._graphs[subject]
        except KeyError:
            raise UnknownSubject(f"no graph for subject {subject!r}") from None

    def has(self, subject: str) -> bool:
        return subject in self._graphs

    def get_or_create(self, subject: str) -> KnowledgeGraph:
        if not subject or not subject.strip():
            raise EmptySubject("subject label must be non-empty")
        with self._lock:
            if subject not in self._graphs:
                self._graphs[subject] = KnowledgeGraph(subject)
            return self._graphs[subject]

    def subjects(self) -> list[str]:
        return sorted(self._graphs)

    def attach(self, graph: KnowledgeGraph) -> None:
        """Register an existing graph (snapshot import path)."""
        with self._lock:
            if graph.subject in self._graphs:
                raise SubjectCollision(f"subject {graph.subject!r} already occupied")
            self._graphs[graph.subject] = graph

    def __len__(self) -> int:
        return len(self._graphs)
