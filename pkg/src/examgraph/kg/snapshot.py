"""Graph snapshots as UTF-8 JSON Lines.

Line 1 is a header record, then one record per node and per edge:

    {"type":"header","format":"kaqg-kg","version":1,"subject":"..."}
    {"type":"node","id":"n12","kind":"text","label":"...","raw_labels":[...],"source_refs":[["doc1",3]]}
    {"type":"edge","kind":"fact","from":"n12","to":"n7","label":"harms"}

``import_graph(export_graph(g))`` reproduces the graph with identical node
ids, labels and edges.
"""

from __future__ import annotations

import json
import re

from ..errors import MalformedSnapshot
from .graph import _EDGE_TYPING, Edge, EdgeKind, KnowledgeGraph, Node, NodeKind

SNAPSHOT_FORMAT = "kaqg-kg"
SNAPSHOT_VERSION = 1

_ID_SUFFIX = re.compile(r"^n(\d+)$")


def _node_sort_key(node_id: str) -> tuple:
    m = _ID_SUFFIX.match(node_id)
    return (0, int(m.group(1)), "") if m else (1, 0, node_id)


def export_graph(graph: KnowledgeGraph) -> bytes:
    """Serialize one subject graph; output bytes are deterministic."""
    lines = [json.dumps({
        "type": "header",
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "subject": graph.subject,
    }, ensure_ascii=False)]
    for node in sorted(graph.nodes(), key=lambda n: _node_sort_key(n.id)):
        lines.append(json.dumps({
            "type": "node",
            "id": node.id,
            "kind": node.kind.value,
            "label": node.label,
            "raw_labels": sorted(node.raw_labels),
            "source_refs": [[doc, seg] for doc, seg in node.source_refs],
        }, ensure_ascii=False))
    for edge in graph.edges():
        record = {
            "type": "edge",
            "kind": edge.kind.value,
            "from": edge.src,
            "to": edge.dst,
        }
        if edge.kind == EdgeKind.FACT:
            record["label"] = edge.label
        lines.append(json.dumps(record, ensure_ascii=False))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _fail(line_no: int, reason: str):
    raise MalformedSnapshot(line_no, reason)


def _require(record: dict, key: str, line_no: int):
    if key not in record:
        _fail(line_no, f"missing key {key!r}")
    return record[key]


def import_graph(stream: bytes | str) -> KnowledgeGraph:
    """Rebuild a graph from snapshot bytes; the caller registers it
    (GraphRegistry.attach raises SubjectCollision on occupied subjects)."""
    if isinstance(stream, bytes):
        try:
            text = stream.decode("utf-8")
        except UnicodeDecodeError as exc:
            _fail(0, f"not valid UTF-8: {exc}")
    else:
        text = stream
    lines = text.splitlines()
    if not lines:
        _fail(0, "empty snapshot")

    records = []
    for line_no, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            _fail(line_no, f"invalid JSON: {exc.msg}")
        if not isinstance(record, dict):
            _fail(line_no, "record is not an object")
        records.append((line_no, record))

    line_no, header = records[0]
    if header.get("type") != "header":
        _fail(line_no, "first record must be the header")
    if header.get("format") != SNAPSHOT_FORMAT:
        _fail(line_no, f"unknown format {header.get('format')!r}")
    if header.get("version") != SNAPSHOT_VERSION:
        _fail(line_no, f"unsupported version {header.get('version')!r}")
    subject = _require(header, "subject", line_no)
    if not isinstance(subject, str) or not subject.strip():
        _fail(line_no, "header subject must be a non-empty string")

    graph = KnowledgeGraph(subject)
    max_id = -1
    for line_no, record in records[1:]:
        kind = record.get("type")
        if kind == "node":
            node = _parse_node(record, line_no)
            if graph.has_node(node.id):
                _fail(line_no, f"duplicate node id {node.id!r}")
            graph._nodes[node.id] = node
            key = (node.kind, node.label)
            if key in graph._by_key:
                _fail(line_no, f"duplicate node ({node.kind.value}, {node.label!r})")
            graph._by_key[key] = node.id
            m = _ID_SUFFIX.match(node.id)
            if m:
                max_id = max(max_id, int(m.group(1)))
        elif kind == "edge":
            edge = _parse_edge(record, line_no)
            if not graph.has_node(edge.src) or not graph.has_node(edge.dst):
                _fail(line_no, "edge references unknown node")
            src_kind = graph.node(edge.src).kind
            dst_kind = graph.node(edge.dst).kind
            want = _EDGE_TYPING[edge.kind]
            if (src_kind, dst_kind) != want:
                _fail(line_no, f"edge kind {edge.kind.value} violates node typing")
            if edge in graph._edges:
                _fail(line_no, "duplicate edge")
            graph._edges.add(edge)
            graph._out.setdefault(edge.src, []).append(edge)
            graph._in.setdefault(edge.dst, []).append(edge)
        elif kind == "header":
            _fail(line_no, "unexpected second header")
        else:
            _fail(line_no, f"unknown record type {kind!r}")
    graph._next_id = max_id + 1
    return graph


def _parse_node(record: dict, line_no: int) -> Node:
    node_id = _require(record, "id", line_no)
    kind_raw = _require(record, "kind", line_no)
    label = _require(record, "label", line_no)
    try:
        kind = NodeKind(kind_raw)
    except ValueError:
        _fail(line_no, f"unknown node kind {kind_raw!r}")
    if not isinstance(node_id, str) or not node_id:
        _fail(line_no, "node id must be a non-empty string")
    if not isinstance(label, str) or not label:
        _fail(line_no, "node label must be a non-empty string")
    raw_labels = record.get("raw_labels", [])
    refs = record.get("source_refs", [])
    if not isinstance(raw_labels, list) or not all(isinstance(r, str) for r in raw_labels):
        _fail(line_no, "raw_labels must be a list of strings")
    source_refs: list[tuple[str, int]] = []
    if not isinstance(refs, list):
        _fail(line_no, "source_refs must be a list")
    for ref in refs:
        if (not isinstance(ref, list) or len(ref) != 2
                or not isinstance(ref[0], str) or not isinstance(ref[1], int)):
            _fail(line_no, f"bad source_ref {ref!r}")
        source_refs.append((ref[0], ref[1]))
    return Node(id=node_id, kind=kind, label=label,
                raw_labels=set(raw_labels), source_refs=source_refs)


def _parse_edge(record: dict, line_no: int) -> Edge:
    kind_raw = _require(record, "kind", line_no)
    src = _require(record, "from", line_no)
    dst = _require(record, "to", line_no)
    try:
        kind = EdgeKind(kind_raw)
    except ValueError:
        _fail(line_no, f"unknown edge kind {kind_raw!r}")
    if kind == EdgeKind.FACT:
        label = _require(record, "label", line_no)
        if not isinstance(label, str) or not label:
            _fail(line_no, "fact edge label must be a non-empty string")
    else:
        if "label" in record:
            _fail(line_no, f"{kind.value} edges carry no label")
        label = None
    return Edge(kind=kind, src=src, dst=dst, label=label)
