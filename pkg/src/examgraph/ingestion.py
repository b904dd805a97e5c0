"""Document ingestion: transcription, segmentation, triple/concept extraction
and assembly into the subject graph.

The built-in :class:`RuleExtractor` is a deterministic offline baseline
(sentence-level subject-verb-object matching plus a hypernym lexicon);
:class:`LLMExtractor` delegates to a chat-completion backend and enforces a
strict JSON reply contract.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .errors import (
    ExtractorFailure,
    InvalidExtraction,
    SubjectCollision,
    UnsupportedFormat,
)
from .kg import EdgeKind, GraphRegistry, KnowledgeGraph, NodeKind
from .textutils import DEFAULT_RELATION_VERBS, naive_svo, normalize_label, split_sentences

PLAIN = "plain"
MARKDOWN = "markdown"


@dataclass
class SourceDocument:
    doc_id: str
    subject: str
    chapter_path: list[str]
    body: str
    format: str = PLAIN

    def __post_init__(self):
        if not self.body:
            raise ValueError("document body must be non-empty")
        if not self.chapter_path:
            raise ValueError("chapter_path must be non-empty")


@dataclass
class TextSegment:
    doc_id: str
    index: int
    text: str


@dataclass
class ExtractionResult:
    triples: list[tuple[str, str, str]] = field(default_factory=list)
    concept_map: dict[str, list[str]] = field(default_factory=dict)


class Extractor(Protocol):
    def extract(self, text: str) -> ExtractionResult: ...


# --- transcription ---

_MD_PATTERNS = [
    (re.compile(r"^```.*$", re.MULTILINE), ""),              # code fences
    (re.compile(r"!\[([^\]]*)\]\([^)]*\)"), r"\1"),          # images -> alt
    (re.compile(r"\[([^\]]+)\]\([^)]*\)"), r"\1"),           # links -> text
    (re.compile(r"^#{1,6}\s*", re.MULTILINE), ""),           # headings
    (re.compile(r"^\s*[-*+]\s+", re.MULTILINE), ""),         # bullet markers
    (re.compile(r"^\s*\d+[.)]\s+", re.MULTILINE), ""),       # numbered lists
    (re.compile(r"^>\s?", re.MULTILINE), ""),                # blockquotes
    (re.compile(r"\*\*([^*]+)\*\*"), r"\1"),
    (re.compile(r"__([^_]+)__"), r"\1"),
    (re.compile(r"\*([^*]+)\*"), r"\1"),
    (re.compile(r"\b_([^_]+)_\b"), r"\1"),
    (re.compile(r"`([^`]+)`"), r"\1"),
    (re.compile(r"^\s*([-*_]\s*){3,}$", re.MULTILINE), ""),  # horizontal rules
]


def transcribe(document: SourceDocument) -> str:
    """Text form of a document. Plain text passes through unchanged;
    markdown is reduced to its visible text with headings kept in reading
    order. Anything else is the out-of-scope transcription seam."""
    if document.format == PLAIN:
        return document.body
    if document.format == MARKDOWN:
        text = document.body
        for pattern, repl in _MD_PATTERNS:
            text = pattern.sub(repl, text)
        lines = [line.rstrip() for line in text.splitlines()]
        text = "\n".join(lines)
        return re.sub(r"\n{3,}", "\n\n", text).strip("\n")
    raise UnsupportedFormat(f"no transcription adapter for format {document.format!r}")


# --- segmentation ---

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


def segment_text(text: str, max_chars: int = 2000, doc_id: str = "") -> list[TextSegment]:
    """Split on blank-line paragraph boundaries, greedily merging adjacent
    paragraphs up to ``max_chars``; oversized paragraphs split at sentence
    boundaries."""
    if max_chars < 200:
        raise ValueError(f"max_chars must be >= 200, got {max_chars}")
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    pieces: list[str] = []
    for para in paragraphs:
        if len(para) <= max_chars:
            pieces.append(para)
            continue
        current = ""
        for sentence in _SENTENCE_BOUNDARY.split(para):
            while len(sentence) > max_chars:  # pathological single sentence
                pieces.append(sentence[:max_chars])
                sentence = sentence[max_chars:]
            if not current:
                current = sentence
            elif len(current) + 1 + len(sentence) <= max_chars:
                current = f"{current} {sentence}"
            else:
                pieces.append(current)
                current = sentence
        if current:
            pieces.append(current)

    segments: list[TextSegment] = []
    buffer = ""
    for piece in pieces:
        if not buffer:
            buffer = piece
        elif len(buffer) + 2 + len(piece) <= max_chars:
            buffer = f"{buffer}\n\n{piece}"
        else:
            segments.append(TextSegment(doc_id, len(segments), buffer))
            buffer = piece
    if buffer:
        segments.append(TextSegment(doc_id, len(segments), buffer))
    return segments


# --- extraction ---

def validate_extraction(result: ExtractionResult) -> ExtractionResult:
    """Reject results whose concept map mentions entities absent from the
    triples; extractor output is never silently repaired."""
    seen: set[str] = set()
    for triple in result.triples:
        if len(triple) != 3 or not all(isinstance(x, str) and x.strip() for x in triple):
            raise InvalidExtraction(f"bad triple {triple!r}")
        seen.add(normalize_label(triple[0]))
        seen.add(normalize_label(triple[2]))
    for entity, concepts in result.concept_map.items():
        if normalize_label(entity) not in seen:
            raise InvalidExtraction(
                f"concept mapping for {entity!r} has no matching triple entity")
        if (not isinstance(concepts, list) or not concepts
                or not all(isinstance(c, str) and c.strip() for c in concepts)):
            raise InvalidExtraction(f"bad concept list for {entity!r}")
    return result


def load_hypernym_lexicon(path_or_data) -> dict[str, list[str]]:
    """Hypernym lexicon file: JSON object of normalized entity label ->
    list of concept labels."""
    if isinstance(path_or_data, dict):
        data = path_or_data
    else:
        with open(path_or_data, encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidExtraction("hypernym lexicon must be a JSON object")
    lexicon: dict[str, list[str]] = {}
    for entity, concepts in data.items():
        if not isinstance(concepts, list) or not all(isinstance(c, str) for c in concepts):
            raise InvalidExtraction(f"lexicon entry {entity!r} must map to a list of strings")
        lexicon[normalize_label(entity)] = list(concepts)
    return lexicon


class RuleExtractor:
    """Deterministic sentence-level extractor.

    One triple per sentence via the naive subject-verb-object heuristic;
    concept mappings come from the configured hypernym lexicon.
    """

    def __init__(self, hypernyms: dict[str, list[str]] | None = None,
                 verbs: frozenset[str] = DEFAULT_RELATION_VERBS):
        self.hypernyms = {normalize_label(k): v for k, v in (hypernyms or {}).items()}
        self.verbs = verbs

    def extract(self, text: str) -> ExtractionResult:
        triples: list[tuple[str, str, str]] = []
        for sentence in split_sentences(text):
            match = naive_svo(sentence, self.verbs)
            if match:
                triples.append(match)
        concept_map: dict[str, list[str]] = {}
        for h, _, t in triples:
            for entity in (h, t):
                norm = normalize_label(entity)
                if norm in self.hypernyms and norm not in concept_map:
                    concept_map[norm] = list(self.hypernyms[norm])
        return validate_extraction(ExtractionResult(triples, concept_map))


EXTRACTION_SYSTEM_PROMPT = (
    "You turn course text into knowledge-graph data. Reply with exactly one "
    'JSON object of the form {"triples": [[head, relation, tail], ...], '
    '"concepts": {entity: [concept, ...]}} and nothing else. Every concepts '
    "key must appear as a head or tail in triples."
)


class LLMExtractor:
    """Extractor backed by a chat-completion callable.

    Sends one segment per request; any reply that is not the required JSON
    object shape is rejected as InvalidExtraction.
    """

    def __init__(self, complete_fn: Callable[[str, str], str]):
        self._complete = complete_fn

    def extract(self, text: str) -> ExtractionResult:
        try:
            reply = self._complete(EXTRACTION_SYSTEM_PROMPT, text)
        except Exception as exc:
            raise ExtractorFailure(f"extraction backend failed: {exc}") from exc
        return validate_extraction(parse_extraction_reply(reply))


def parse_extraction_reply(reply: str) -> ExtractionResult:
    try:
        data = json.loads(reply)
    except json.JSONDecodeError as exc:
        raise InvalidExtraction(f"reply is not JSON: {exc.msg}") from exc
    if not isinstance(data, dict) or set(data) != {"triples", "concepts"}:
        raise InvalidExtraction('reply must be {"triples": ..., "concepts": ...}')
    triples_raw = data["triples"]
    concepts_raw = data["concepts"]
    if not isinstance(triples_raw, list) or not isinstance(concepts_raw, dict):
        raise InvalidExtraction("triples must be a list and concepts an object")
    triples = []
    for entry in triples_raw:
        if not isinstance(entry, list) or len(entry) != 3:
            raise InvalidExtraction(f"bad triple entry {entry!r}")
        triples.append((entry[0], entry[1], entry[2]))
    return ExtractionResult(triples, {k: list(v) if isinstance(v, list) else v
                                      for k, v in concepts_raw.items()})


def extract_segment(segment: TextSegment, extractor: Extractor) -> ExtractionResult:
    """Run one segment through an extractor and validate the result.
    Backend exceptions surface as ExtractorFailure; invalid output as
    InvalidExtraction."""
    try:
        result = extractor.extract(segment.text)
    except (ExtractorFailure, InvalidExtraction):
        raise
    except Exception as exc:
        raise ExtractorFailure(f"extractor raised: {exc}") from exc
    return validate_extraction(result)


# --- assembly ---

@dataclass
class IngestReport:
    doc_id: str
    subject: str
    segments: int = 0
    triples_added: int = 0
    concepts_added: int = 0
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "subject": self.subject,
            "segments": self.segments,
            "triples_added": self.triples_added,
            "concepts_added": self.concepts_added,
            "failures": self.failures,
        }


def build_hierarchy(graph: KnowledgeGraph, chapter_path: list[str]) -> str:
    """Upsert the chapter chain, adding child->parent part_of edges;
    returns the leaf chapter node id."""
    previous: str | None = None
    node_id = ""
    for label in chapter_path:
        node_id = graph.upsert_entity(label, NodeKind.HIERARCHY)
        if previous is not None:
            graph.assert_link(EdgeKind.PART_OF, node_id, previous)
        previous = node_id
    return node_id


def apply_extraction(graph: KnowledgeGraph, result: ExtractionResult,
                     leaf_chapter: str, source_ref: tuple[str, int],
                     report: IngestReport) -> None:
    """Fold one segment's extraction into the graph: fact edges for triples,
    then concept nodes with is_a and include_in links."""
    for h, r, t in result.triples:
        before = graph.edge_count
        graph.assert_fact_triple(h, r, t, source_ref)
        report.triples_added += graph.edge_count - before
    for entity, concepts in result.concept_map.items():
        entity_id = graph.find_node(entity, NodeKind.TEXT)
        if entity_id is None:
            raise InvalidExtraction(f"concept mapping for unseen entity {entity!r}")
        for concept in concepts:
            existing = graph.find_node(concept, NodeKind.CONCEPT)
            concept_id = graph.upsert_entity(concept, NodeKind.CONCEPT)
            if existing is None:
                report.concepts_added += 1
            graph.assert_link(EdgeKind.IS_A, entity_id, concept_id)
            graph.assert_link(EdgeKind.INCLUDE_IN, concept_id, leaf_chapter)


def _open_graph(registry: GraphRegistry, subject: str, append: bool) -> KnowledgeGraph:
    """First ingest creates the graph; re-ingesting into a populated graph
    requires the explicit append flag (isolation safety by default)."""
    if registry.has(subject):
        graph = registry.get(subject)
        if len(graph) > 0 and not append:
            raise SubjectCollision(
                f"subject {subject!r} already has content; pass append=True")
        return graph
    return registry.get_or_create(subject)


def apply_extractions(registry: GraphRegistry, subject: str, doc_id: str,
                      chapter_path: list[str], entries: list[dict], *,
                      append: bool = False, segments: int = 0,
                      failures: list[dict] | None = None) -> IngestReport:
    """Assemble pre-extracted segment results (triples + concept maps) into
    the subject graph; the agent-pipeline counterpart of ingest_document."""
    graph = _open_graph(registry, subject, append)
    report = IngestReport(doc_id=doc_id, subject=subject, segments=segments,
                          failures=list(failures or []))
    leaf = build_hierarchy(graph, chapter_path)
    for entry in entries:
        index = entry.get("segment", 0)
        try:
            result = validate_extraction(ExtractionResult(
                triples=[(t[0], t[1], t[2]) for t in entry.get("triples", [])],
                concept_map={k: list(v) for k, v in entry.get("concepts", {}).items()},
            ))
            apply_extraction(graph, result, leaf, (doc_id, index), report)
        except Exception as exc:
            report.failures.append({
                "segment": index,
                "error_code": getattr(exc, "code", "error"),
                "message": str(exc),
            })
    return report


def ingest_document(registry: GraphRegistry, document: SourceDocument,
                    extractor: Extractor, *, append: bool = False,
                    max_chars: int = 2000) -> IngestReport:
    """Run the full pipeline for one document and assemble its subject graph.

    A fresh subject graph is created on first ingest; re-ingesting into a
    populated graph requires ``append=True``. Extraction failures are
    isolated per segment and listed in the report.
    """
    graph = _open_graph(registry, document.subject, append)
    report = IngestReport(doc_id=document.doc_id, subject=document.subject)
    text = transcribe(document)
    segments = segment_text(text, max_chars=max_chars, doc_id=document.doc_id)
    report.segments = len(segments)
    leaf = build_hierarchy(graph, document.chapter_path)
    for segment in segments:
        try:
            result = extract_segment(segment, extractor)
            apply_extraction(graph, result, leaf,
                             (document.doc_id, segment.index), report)
        except Exception as exc:  # keep going; long documents fail per segment
            report.failures.append({
                "segment": segment.index,
                "error_code": getattr(exc, "code", "error"),
                "message": str(exc),
            })
    return report
