from .blueprint import (
    TIER_ORDER,
    BlueprintSection,
    ExamBlueprint,
    allocate_counts,
    allocation_ratios,
)
from .exam import (
    Candidate,
    Exam,
    ExamSession,
    SlotRef,
    evaluate_candidate,
    evaluated_item_payload,
    generate_exam,
)
from .generator import (
    DEFAULT_TIER_BLOOM,
    GENERATION_SYSTEM_PROMPT,
    Generator,
    LLMGenerator,
    Provenance,
    QuestionItem,
    TemplateGenerator,
    generate_candidate,
)
from .material import MaterialBundle, assemble_material

__all__ = [
    "BlueprintSection",
    "Candidate",
    "DEFAULT_TIER_BLOOM",
    "Exam",
    "ExamBlueprint",
    "ExamSession",
    "GENERATION_SYSTEM_PROMPT",
    "Generator",
    "LLMGenerator",
    "MaterialBundle",
    "Provenance",
    "QuestionItem",
    "SlotRef",
    "TIER_ORDER",
    "TemplateGenerator",
    "allocate_counts",
    "allocation_ratios",
    "assemble_material",
    "evaluate_candidate",
    "evaluated_item_payload",
    "generate_candidate",
    "generate_exam",
]
