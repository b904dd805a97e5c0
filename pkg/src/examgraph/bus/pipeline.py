"""The five-agent question pipeline over the pub-sub bus.

Flow (topics in backticks): an `ingest/request` is transcribed, segmented
and mined by *file_extraction*, whose `kg/assert` output *kg_management*
folds into the subject graph (reporting on `ingest/report` and answering
`kg/query` on `kg/reply`). An `exam/request` drives *question_generation*,
which emits one `exam/candidate` at a time; *question_evaluation* grades
each candidate and routes it to `exam/qualified` or back via `exam/reject`
for a retry. When every blueprint slot is resolved the full exam appears on
`exam/complete`. The *llm* agent serves `llm/request` for LLM-backed
extractors/generators. Errors surface on `system/errors`.

Generation and evaluation run the same ExamSession / evaluate_candidate
code as the direct library call, so with a deterministic stack the pipeline
exam is byte-identical to ``generate_exam``'s.
"""

from __future__ import annotations

import queue
import threading
import time
from typing import Callable

from ..assessment import EvaluationResult, RubricConfig, build_lexicon
from ..errors import GatewayTimeout, MalformedResponse
from ..gateway import CompletionRequest, mock_complete
from ..generation import (
    ExamBlueprint,
    ExamSession,
    QuestionItem,
    TemplateGenerator,
    evaluate_candidate,
    evaluated_item_payload,
)
from ..ingestion import (
    SourceDocument,
    apply_extractions,
    extract_segment,
    segment_text,
    transcribe,
)
from ..kg import GraphRegistry
from .agents import AgentDescriptor, AgentHandle, Outgoing, spawn_agent
from .core import MessageBus

CompleteFn = Callable[[str, str], str]
GeneratorFactory = Callable[..., object]  # (graph, seed) -> Generator


def default_mock_complete(system_prompt: str, user_prompt: str,
                          seed: int = 0) -> str:
    return mock_complete(seed, CompletionRequest(system_prompt, user_prompt))


class BusCompletion:
    """Chat-completion callable that round-trips through the llm agent
    (`llm/request` -> `llm/reply`), for LLM-backed extractors/generators
    running inside other agents."""

    def __init__(self, bus: MessageBus, requester: str, timeout: float = 30.0):
        self.bus = bus
        self.requester = requester
        self.timeout = timeout
        self._counter = 0
        self._lock = threading.Lock()

    def __call__(self, system_prompt: str, user_prompt: str) -> str:
        with self._lock:
            self._counter += 1
            correlation = f"{self.requester}-llm-{self._counter}"
        sub = self.bus.subscribe(f"{self.requester}-wait-{self._counter}", "llm/reply")
        try:
            self.bus.publish("llm/request", {
                "system_prompt": system_prompt,
                "user_prompt": user_prompt,
            }, sender=self.requester, correlation_id=correlation)
            deadline = time.monotonic() + self.timeout
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise GatewayTimeout("no llm/reply before timeout")
                try:
                    message = sub.get(timeout=remaining)
                except queue.Empty:
                    raise GatewayTimeout("no llm/reply before timeout") from None
                if message is None:
                    raise GatewayTimeout("bus closed while waiting for llm/reply")
                if message.correlation_id != correlation:
                    continue
                payload = message.payload or {}
                if "error_code" in payload:
                    raise MalformedResponse(
                        f"llm agent error {payload['error_code']}: "
                        f"{payload.get('message', '')}")
                return payload["text"]
        finally:
            sub.close()


def _file_extraction_agent(max_chars: int, extractor) -> AgentDescriptor:
    def handler(ctx, message):
        payload = message.payload or {}
        doc = SourceDocument(**payload["doc"])
        text = transcribe(doc)
        segments = segment_text(text, max_chars=payload.get("max_chars", max_chars),
                                doc_id=doc.doc_id)
        extractions = []
        failures = []
        for segment in segments:
            try:
                result = extract_segment(segment, extractor)
                extractions.append({
                    "segment": segment.index,
                    "triples": [list(t) for t in result.triples],
                    "concepts": {k: list(v) for k, v in result.concept_map.items()},
                })
            except Exception as exc:
                failures.append({
                    "segment": segment.index,
                    "error_code": getattr(exc, "code", "error"),
                    "message": str(exc),
                })
        return [Outgoing("kg/assert", {
            "subject": doc.subject,
            "doc_id": doc.doc_id,
            "chapter_path": list(doc.chapter_path),
            "append": bool(payload.get("append", False)),
            "segments": len(segments),
            "extractions": extractions,
            "failures": failures,
        })]

    return AgentDescriptor("file_extraction", ["ingest/request"], handler)


def _kg_management_agent(registry: GraphRegistry) -> AgentDescriptor:
    def handler(ctx, message):
        if message.topic == "kg/assert":
            payload = message.payload or {}
            report = apply_extractions(
                registry, payload["subject"], payload["doc_id"],
                payload["chapter_path"], payload.get("extractions", []),
                append=payload.get("append", False),
                segments=payload.get("segments", 0),
                failures=payload.get("failures"),
            )
            return [Outgoing("ingest/report", report.to_dict())]
        return [Outgoing("kg/reply", _answer_query(registry, message.payload or {}))]

    return AgentDescriptor("kg_management", ["kg/assert", "kg/query"], handler)


def _answer_query(registry: GraphRegistry, payload: dict) -> dict:
    op = payload.get("op")
    try:
        graph = registry.get(payload.get("subject", ""))
        if op == "stats":
            return {"op": op, "stats": graph.stats()}
        if op == "neighbors":
            from ..kg import EdgeKind

            kind = EdgeKind(payload["kind"]) if payload.get("kind") else None
            pairs = graph.query_neighbors(payload["node"],
                                          payload.get("direction", "both"), kind)
            return {"op": op, "neighbors": [
                {
                    "edge": {"kind": e.kind.value, "from": e.src, "to": e.dst,
                             "label": e.label},
                    "node": {"id": n.id, "kind": n.kind.value, "label": n.label},
                }
                for e, n in pairs
            ]}
        return {"op": op, "error_code": "bad_query",
                "message": f"unknown op {op!r}"}
    except Exception as exc:
        return {"op": op, "error_code": getattr(exc, "code", "error"),
                "message": str(exc)}


def _question_generation_agent(registry: GraphRegistry,
                               generator_factory: GeneratorFactory,
                               rubric: RubricConfig, top_concepts: int,
                               top_m_facts: int, max_retries: int) -> AgentDescriptor:
    def emit_next(state: dict, request_id: str) -> list[Outgoing]:
        session: ExamSession = state[request_id]["session"]
        candidate = session.next_candidate()
        if candidate is None:
            exam = session.build_exam()
            del state[request_id]
            return [Outgoing("exam/complete", exam.to_dict(),
                             correlation_id=request_id)]
        state[request_id]["pending"] = candidate
        return [Outgoing("exam/candidate", {
            "subject": session.blueprint.subject,
            "candidate": candidate.to_payload(),
        }, correlation_id=request_id)]

    def handler(ctx, message):
        state = ctx.state
        payload = message.payload or {}
        if message.topic == "exam/request":
            request_id = message.correlation_id or f"{message.sender}-{message.seq}"
            blueprint = ExamBlueprint.from_dict(payload["blueprint"])
            seed = int(payload.get("seed", 0))
            graph = registry.get(blueprint.subject)  # raises -> system/errors
            generator = generator_factory(graph, seed)
            session = ExamSession(
                graph, blueprint, generator, rubric, seed=seed,
                top_concepts=int(payload.get("top_concepts", top_concepts)),
                top_m_facts=int(payload.get("top_m_facts", top_m_facts)),
                max_retries=int(payload.get("max_retries", max_retries)),
            )
            state[request_id] = {"session": session, "pending": None}
            return emit_next(state, request_id)

        request_id = message.correlation_id
        entry = state.get(request_id)
        if entry is None or entry["pending"] is None:
            return []
        session: ExamSession = entry["session"]
        result = EvaluationResult.from_dict(payload["evaluation"])
        session.record_result(entry["pending"], result)
        entry["pending"] = None
        return emit_next(state, request_id)

    return AgentDescriptor(
        "question_generation",
        ["exam/request", "exam/reject", "exam/qualified"],
        handler,
    )


def _question_evaluation_agent(registry: GraphRegistry,
                               rubric: RubricConfig) -> AgentDescriptor:
    lexicons: dict[str, frozenset] = {}

    def handler(ctx, message):
        payload = message.payload or {}
        candidate = payload["candidate"]
        subject = payload["subject"]
        if subject not in lexicons:
            lexicons[subject] = build_lexicon(registry.get(subject))
        item = QuestionItem.from_payload(candidate["item"])
        result = evaluate_candidate(
            item, candidate["target"], candidate["epsilon"],
            candidate.get("weights"), rubric, lexicons[subject],
        )
        if result.passed:
            return [Outgoing("exam/qualified", {
                "slot": candidate["slot"],
                "item": evaluated_item_payload(item, result),
                "evaluation": result.to_dict(),
            })]
        return [Outgoing("exam/reject", {
            "candidate": candidate,
            "evaluation": result.to_dict(),
        })]

    return AgentDescriptor("question_evaluation", ["exam/candidate"], handler)


def _llm_agent(complete_fn: CompleteFn) -> AgentDescriptor:
    def handler(ctx, message):
        payload = message.payload or {}
        try:
            text = complete_fn(payload["system_prompt"], payload["user_prompt"])
            return [Outgoing("llm/reply", {"text": text})]
        except Exception as exc:
            return [Outgoing("llm/reply", {
                "error_code": getattr(exc, "code", "error"),
                "message": str(exc),
            })]

    return AgentDescriptor("llm", ["llm/request"], handler)


class PipelineHandle:
    def __init__(self, agents: list[AgentHandle]):
        self.agents = agents

    @property
    def agent_names(self) -> list[str]:
        return [a.name for a in self.agents]

    def stop(self) -> None:
        for agent in reversed(self.agents):
            agent.stop()


def run_pipeline(bus: MessageBus, registry: GraphRegistry, extractor,
                 generator_factory: GeneratorFactory | None = None,
                 rubric: RubricConfig | None = None, *,
                 llm_complete: CompleteFn | None = None,
                 max_chars: int = 2000, top_concepts: int = 10,
                 top_m_facts: int = 5, max_retries: int = 5) -> PipelineHandle:
    """Spawn the five pipeline agents on the bus and return their handle.

    With no ``generator_factory`` the deterministic template generator is
    used; with no ``llm_complete`` the llm agent serves the offline mock.
    """
    rubric = rubric or RubricConfig()
    generator_factory = generator_factory or (
        lambda graph, seed: TemplateGenerator(graph, seed=seed))
    complete_fn = llm_complete or default_mock_complete
    agents = [
        spawn_agent(bus, _file_extraction_agent(max_chars, extractor)),
        spawn_agent(bus, _kg_management_agent(registry)),
        spawn_agent(bus, _question_generation_agent(
            registry, generator_factory, rubric,
            top_concepts, top_m_facts, max_retries)),
        spawn_agent(bus, _llm_agent(complete_fn)),
        spawn_agent(bus, _question_evaluation_agent(registry, rubric)),
    ]
    return PipelineHandle(agents)
