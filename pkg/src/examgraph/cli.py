"""Operator command line. Every output is JSON on stdout; domain errors are
JSON on stderr with exit code 1; usage errors exit 2.

Graphs persist between invocations as snapshot files in the data directory
(one ``<subject>.kg.jsonl`` per subject).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from pathlib import Path

from .assessment import DifficultyTier, RubricConfig
from .errors import ExamGraphError, InsufficientMaterial, UnknownSubject
from .gateway import CompletionRequest, ProviderConfig, complete, mock_complete
from .generation import (
    ExamBlueprint,
    LLMGenerator,
    QuestionItem,
    TemplateGenerator,
    generate_exam,
)
from .ingestion import (
    LLMExtractor,
    RuleExtractor,
    SourceDocument,
    ingest_document,
    load_hypernym_lexicon,
)
from .kg import GraphRegistry, NodeKind, export_graph, import_graph
from .psychometrics import ResponseMatrix, analyze
from .ranking import PageRankConfig, rank_chapter_concepts, rank_concept_facts

DEFAULT_DATA_DIR = "./kgdata"


def _slug(subject: str) -> str:
    return re.sub(r"[^a-z0-9_-]+", "_", subject.lower()).strip("_") or "subject"


class SnapshotStore:
    """Filesystem-backed registry: snapshots loaded on demand, saved after
    mutation."""

    def __init__(self, data_dir: str):
        self.root = Path(data_dir)
        self.registry = GraphRegistry()

    def _path(self, subject: str) -> Path:
        return self.root / f"{_slug(subject)}.kg.jsonl"

    def load(self, subject: str) -> None:
        if self.registry.has(subject):
            return
        path = self._path(subject)
        if path.exists():
            self.registry.attach(import_graph(path.read_bytes()))

    def load_all(self) -> None:
        if not self.root.exists():
            return
        for path in sorted(self.root.glob("*.kg.jsonl")):
            graph = import_graph(path.read_bytes())
            if not self.registry.has(graph.subject):
                self.registry.attach(graph)

    def save(self, subject: str) -> None:
        graph = self.registry.get(subject)
        self.root.mkdir(parents=True, exist_ok=True)
        self._path(subject).write_bytes(export_graph(graph))

    def get(self, subject: str):
        self.load(subject)
        return self.registry.get(subject)


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _data_dir(args, config: dict) -> str:
    if getattr(args, "data_dir", None):
        return args.data_dir
    return config.get("data_dir", DEFAULT_DATA_DIR)


def _rubric(args, config: dict) -> RubricConfig:
    if getattr(args, "rubric", None):
        return RubricConfig.load(args.rubric)
    rubric_cfg = config.get("rubric")
    if isinstance(rubric_cfg, str):
        return RubricConfig.load(rubric_cfg)
    if isinstance(rubric_cfg, dict):
        return RubricConfig.from_dict(rubric_cfg)
    return RubricConfig()


def _provider(config: dict) -> ProviderConfig:
    provider = config.get("provider")
    if not provider:
        raise ExamGraphError("no provider configured; add one to --config "
                             "or use the mock backend")
    return ProviderConfig(
        endpoint=provider["endpoint"],
        model=provider.get("model", ""),
        auth_env=provider.get("auth_env", "EXAMGRAPH_API_TOKEN"),
        retries=int(provider.get("retries", 3)),
    )


def _complete_fn(args, config: dict):
    backend = getattr(args, "backend", "mock")
    if backend == "mock":
        seed = int(getattr(args, "seed", 0) or 0)
        return lambda system, user: mock_complete(
            seed, CompletionRequest(system, user))
    provider = _provider(config)
    return lambda system, user: complete(
        provider, CompletionRequest(system, user))


def _emit(data, out: str | None = None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_bytes(text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def _emit_error(exc: Exception) -> None:
    payload = {"error_code": getattr(exc, "code", "error"), "message": str(exc)}
    if hasattr(exc, "line_no"):
        payload["line"] = exc.line_no
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


# --- subcommands ---

def cmd_ingest(args) -> int:
    config = _load_config(args)
    store = SnapshotStore(_data_dir(args, config))
    store.load(args.subject)
    hypernyms = load_hypernym_lexicon(args.lexicon) if args.lexicon else {}
    if args.extractor == "rule":
        extractor = RuleExtractor(hypernyms)
    elif args.extractor == "mock-llm":
        extractor = LLMExtractor(_complete_fn(args, config))
    else:
        provider = _provider(config)
        extractor = LLMExtractor(
            lambda system, user: complete(provider, CompletionRequest(system, user)))
    doc_path = Path(args.doc)
    fmt = args.format or ("markdown" if doc_path.suffix.lower() in (".md", ".markdown")
                          else "plain")
    chapters = args.chapter or [doc_path.stem]
    document = SourceDocument(
        doc_id=args.doc_id or doc_path.name,
        subject=args.subject,
        chapter_path=chapters,
        body=doc_path.read_text(encoding="utf-8"),
        format=fmt,
    )
    report = ingest_document(store.registry, document, extractor,
                             append=args.append, max_chars=args.max_chars)
    store.save(args.subject)
    _emit(report.to_dict())
    return 0


def cmd_graph_export(args) -> int:
    config = _load_config(args)
    store = SnapshotStore(_data_dir(args, config))
    data = export_graph(store.get(args.subject))
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return 0


def cmd_graph_stats(args) -> int:
    config = _load_config(args)
    store = SnapshotStore(_data_dir(args, config))
    _emit(store.get(args.subject).stats())
    return 0


def cmd_rank(args) -> int:
    config = _load_config(args)
    store = SnapshotStore(_data_dir(args, config))
    graph = store.get(args.subject)
    pr_config = PageRankConfig(damping=args.damping, tol=args.tol,
                               max_iter=args.max_iter)
    if args.facts_of:
        concept = graph.find_node(args.facts_of, NodeKind.CONCEPT)
        if concept is None:
            raise UnknownSubject(f"no concept {args.facts_of!r} in {args.subject!r}")
        ranked = rank_concept_facts(graph, concept, args.top, pr_config)
    else:
        chapter = graph.find_node(args.chapter, NodeKind.HIERARCHY)
        if chapter is None:
            raise UnknownSubject(f"no chapter {args.chapter!r} in {args.subject!r}")
        ranked = rank_chapter_concepts(graph, chapter, pr_config)[:args.top]
    _emit([
        {"node": node_id, "label": graph.node(node_id).label, "score": score}
        for node_id, score in ranked
    ])
    return 0


def cmd_blueprint_validate(args) -> int:
    blueprint = ExamBlueprint.load(args.blueprint)
    _emit({
        "valid": True,
        "subject": blueprint.subject,
        "total": blueprint.total,
        "ratios": blueprint.ratios(),
        "sha256": blueprint.sha256(),
        "sections": blueprint.to_dict()["sections"],
    })
    return 0


def cmd_generate(args) -> int:
    config = _load_config(args)
    store = SnapshotStore(_data_dir(args, config))
    blueprint = ExamBlueprint.load(args.blueprint)
    graph = store.get(blueprint.subject)
    rubric = _rubric(args, config)
    if args.generator == "template":
        generator = TemplateGenerator(graph, seed=args.seed)
    else:
        generator = LLMGenerator(_complete_fn(args, config))
    exam = generate_exam(store.registry, blueprint, generator, rubric,
                         seed=args.seed, top_concepts=args.top_concepts,
                         top_m_facts=args.top_facts, max_retries=args.retries)
    payload = exam.to_json().encode("utf-8")
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    if not exam.complete:
        _emit_error(InsufficientMaterial(
            f"{len(exam.unfilled)} blueprint cell(s) unfillable; see 'unfilled'"))
        return 1
    return 0


def cmd_evaluate_item(args) -> int:
    config = _load_config(args)
    rubric = _rubric(args, config)
    with open(args.item, encoding="utf-8") as fh:
        data = json.load(fh)
    item = QuestionItem.from_payload(data)
    if args.target is not None:
        target = args.target
    else:
        tier = DifficultyTier(args.tier) if args.tier else item.tier
        target = rubric.target_for(tier)
    lexicon: frozenset[str] = frozenset()
    if args.subject:
        from .assessment import build_lexicon

        store = SnapshotStore(_data_dir(args, config))
        lexicon = build_lexicon(store.get(args.subject))
    result = rubric.evaluate_with_target(item, target, lexicon)
    _emit(result.to_dict())
    return 0


def cmd_analyze(args) -> int:
    matrix = ResponseMatrix.from_csv(Path(args.responses).read_text(encoding="utf-8"))
    groups = None
    if args.groups:
        with open(args.groups, encoding="utf-8") as fh:
            groups = json.load(fh)
    report = analyze(matrix, groups, discrimination_fraction=args.fraction)
    _emit(report, args.out)
    return 0


def cmd_agents_run(args) -> int:
    from .bus import MessageBus, TcpBusServer, run_pipeline

    config = _load_config(args)
    store = SnapshotStore(_data_dir(args, config))
    store.load_all()
    hypernyms = load_hypernym_lexicon(args.lexicon) if args.lexicon else {}
    if args.extractor == "rule":
        extractor = RuleExtractor(hypernyms)
    else:
        extractor = LLMExtractor(_complete_fn(args, config))
    rubric = _rubric(args, config)
    bus = MessageBus()
    pipeline = run_pipeline(bus, store.registry, extractor, rubric=rubric,
                            llm_complete=_complete_fn(args, config))
    server = None
    status = {"status": "running", "agents": pipeline.agent_names,
              "subjects": store.registry.subjects()}
    if args.tcp:
        host, _, port = args.tcp.partition(":")
        server = TcpBusServer(bus, host or "127.0.0.1", int(port or 0))
        server.start()
        status["tcp"] = {"host": server.host, "port": server.port}
    sys.stdout.write(json.dumps(status, sort_keys=True) + "\n")
    sys.stdout.flush()
    try:
        if args.duration is not None:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        if server is not None:
            server.stop()
        pipeline.stop()
        bus.close()
    return 0


# --- parser ---

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", help=f"snapshot directory (default {DEFAULT_DATA_DIR})")
    parser.add_argument("--config", help="global config JSON (flags win)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="examgraph",
        description="knowledge-graph construction, exam generation and item analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest a document into a subject graph")
    p.add_argument("--subject", required=True)
    p.add_argument("--doc", required=True, help="text or markdown file")
    p.add_argument("--doc-id", default=None)
    p.add_argument("--chapter", action="append",
                   help="chapter path element (repeatable, outermost first)")
    p.add_argument("--format", choices=["plain", "markdown"], default=None)
    p.add_argument("--lexicon", help="hypernym lexicon JSON file")
    p.add_argument("--append", action="store_true",
                   help="allow adding to an already-populated subject")
    p.add_argument("--max-chars", type=int, default=2000)
    p.add_argument("--extractor", choices=["rule", "mock-llm", "llm"], default="rule")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_ingest, backend="mock")

    p = sub.add_parser("graph", help="graph snapshots and statistics")
    graph_sub = p.add_subparsers(dest="graph_command", required=True)
    pe = graph_sub.add_parser("export")
    pe.add_argument("--subject", required=True)
    pe.add_argument("--out")
    _add_common(pe)
    pe.set_defaults(func=cmd_graph_export)
    ps = graph_sub.add_parser("stats")
    ps.add_argument("--subject", required=True)
    _add_common(ps)
    ps.set_defaults(func=cmd_graph_stats)

    p = sub.add_parser("rank", help="rank chapter concepts (or a concept's facts)")
    p.add_argument("--subject", required=True)
    p.add_argument("--chapter", help="chapter label to rank concepts for")
    p.add_argument("--facts-of", help="concept label: rank its facts instead")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("blueprint", help="blueprint tools")
    bp_sub = p.add_subparsers(dest="blueprint_command", required=True)
    pv = bp_sub.add_parser("validate")
    pv.add_argument("--blueprint", required=True)
    _add_common(pv)
    pv.set_defaults(func=cmd_blueprint_validate)

    p = sub.add_parser("generate", help="generate an exam from a blueprint")
    p.add_argument("--blueprint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="exam JSON output path (stdout when omitted)")
    p.add_argument("--rubric", help="rubric config JSON")
    p.add_argument("--generator", choices=["template", "llm"], default="template")
    p.add_argument("--backend", choices=["mock", "http"], default="mock",
                   help="completion backend for --generator llm")
    p.add_argument("--mock", action="store_true",
                   help="force the fully offline stack (template generator)")
    p.add_argument("--retries", type=int, default=5)
    p.add_argument("--top-concepts", type=int, default=10)
    p.add_argument("--top-facts", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate-item", help="difficulty breakdown for one item JSON")
    p.add_argument("--item", required=True)
    p.add_argument("--rubric")
    p.add_argument("--target", type=float, default=None)
    p.add_argument("--tier", choices=[t.value for t in DifficultyTier], default=None)
    p.add_argument("--subject", help="subject graph supplying the term lexicon")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate_item)

    p = sub.add_parser("analyze", help="item statistics from a response CSV")
    p.add_argument("--responses", required=True)
    p.add_argument("--groups", help="JSON object: participant id -> group label")
    p.add_argument("--fraction", type=float, default=0.25)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("agents", help="agent runtime")
    ag_sub = p.add_subparsers(dest="agents_command", required=True)
    pr = ag_sub.add_parser("run")
    pr.add_argument("--tcp", help="HOST:PORT for the TCP hub (port 0 = ephemeral)")
    pr.add_argument("--duration", type=float, default=None,
                    help="run for N seconds then exit (default: until interrupt)")
    pr.add_argument("--extractor", choices=["rule", "mock-llm", "llm"], default="rule")
    pr.add_argument("--lexicon")
    pr.add_argument("--backend", choices=["mock", "http"], default="mock")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--rubric")
    _add_common(pr)
    pr.set_defaults(func=cmd_agents_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "mock", False):
        args.generator = "template"
        args.backend = "mock"
    try:
        return args.func(args)
    except (ExamGraphError, ValueError, OSError, json.JSONDecodeError) as exc:
        _emit_error(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
