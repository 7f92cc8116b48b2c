"""Prompt template registry and the JSON schemas for structured replies.

Template ids are stable: transcripts and audit logs key on them, so renaming
one invalidates recorded fixtures. Bodies may be reworded freely.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str                   # str.format placeholders, all bound at render time
    schema: str | None = None   # schema id for structured output, None = free text


_STRUCTURED_SUFFIX = (
    "\n\nReply with a single fenced ```json code block containing only the "
    "required fields."
)

TEMPLATES: dict[str, PromptTemplate] = {}


def _register(template: PromptTemplate) -> None:
    TEMPLATES[template.id] = template


def get_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATES:
        raise KeyError(f"unknown prompt template: {template_id}")
    return TEMPLATES[template_id]


_register(PromptTemplate(
    id="ingest.summarize",
    schema="data_summary",
    body=(
        "You are profiling a tabular dataset for later analysis.\n"
        "Below is the computed profile of the dataset '{dataset_name}'.\n\n"
        "{profile}\n\n"
        "Write a brief semantic description of the dataset as a whole and a "
        "one-line description of every field. Keep descriptions factual and "
        "grounded in the profile."
        + _STRUCTURED_SUFFIX
        + "\nFields: dataset_description (string), fields (array of "
          "{{name, description}} covering every field above)."
    ),
))

_register(PromptTemplate(
    id="segment.match",
    body=(
        "A data report is being split into analysis segments. Decide whether "
        "the paragraph below describes insights drawn from the given chart "
        "and should be grouped with it.\n\n"
        "Chart: {chart_ref}\n"
        "Paragraph:\n{paragraph}\n\n"
        "Answer 'yes' if the paragraph discusses findings shown in this "
        "chart, otherwise 'no'. Answer with a single word."
    ),
))

_register(PromptTemplate(
    id="segment.categorize",
    body=(
        "Classify the following report paragraph.\n\n"
        "{paragraph}\n\n"
        "Answer 'analytical' if it discusses findings computed from the "
        "data (trends, comparisons, distributions, figures). Answer "
        "'non-analytical' if it provides background, context, methodology "
        "notes, or a summary of key takeaways. Answer with a single word."
    ),
))

_register(PromptTemplate(
    id="segment.group",
    body=(
        "Two adjacent analytical paragraphs from a data report:\n\n"
        "First:\n{first}\n\n"
        "Second:\n{second}\n\n"
        "Do both paragraphs describe findings derived from the same "
        "transformed data (one analysis step), or from different analyses? "
        "Answer 'yes' to merge them into one segment, 'no' otherwise."
    ),
))

_register(PromptTemplate(
    id="segment.summarize",
    schema="segment_summary",
    body=(
        "A data report was split into segments. Summarize the analytical "
        "objective of the segment below and identify which earlier segment "
        "its objective builds on, if any.\n\n"
        "Earlier segments (1-based):\n{previous}\n\n"
        "Segment content:\n{content}\n\n"
        "The objective is the question or goal the segment's analysis "
        "answers. If the segment builds on an earlier segment's insight, "
        "report that segment's number and the logical relation, one of: "
        "similarity, contrast, cause_effect, elaboration, generalization, "
        "temporal. If it starts directly from the data, use null."
        + _STRUCTURED_SUFFIX
        + "\nFields: objective (string), depends_on (integer or null), "
          "relation (string)."
    ),
))

_register(PromptTemplate(
    id="rank.infer_fields",
    schema="report_fields",
    body=(
        "Infer the key data fields used by the analysis in this report.\n\n"
        "Title: {title}\n"
        "Headings: {headings}\n"
        "Analytical objectives:\n{objectives}\n\n"
        "List each field the underlying dataset must have contained, with a "
        "one-line description of what it holds."
        + _STRUCTURED_SUFFIX
        + "\nFields: fields (non-empty array of {{name, description}})."
    ),
))

_register(PromptTemplate(
    id="adapt.correct_objective",
    schema="correction",
    body=(
        "An analytical objective from a reference report must be adapted to "
        "a new dataset. Evaluate it along three dimensions, in order.\n\n"
        "Reference objective: {objective}\n\n"
        "New dataset summary:\n{summary}\n\n"
        "Upstream segment this objective depends on ({relation} relation):\n"
        "{parent_context}\n\n"
        "1. data_fields: does the new dataset contain fields semantically "
        "matching those the objective needs, even under different names? "
        "If a needed field is missing, suggest available fields as "
        "alternatives and reframe, or give up.\n"
        "2. insight_dependency: given the upstream segment's actual new "
        "insight above, is the dependency still valid? Revise the objective "
        "if the upstream finding changed direction or scope.\n"
        "3. data_scope: rewrite time ranges, places, or populations to "
        "match what the data actually covers.\n\n"
        "If the objective can be adapted, set result to 'adapted' and give "
        "the rewritten objective plus a short rationale. If it cannot (for "
        "example it needs data outside the dataset's coverage), set result "
        "to 'none' and give the reason."
        + _STRUCTURED_SUFFIX
        + "\nFields: result ('adapted' or 'none'), objective (string, when "
          "adapted), reason (string, when none), rationale (string), "
          "dimensions ({{data_fields, insight_dependency, data_scope}} "
          "strings)."
    ),
))

_register(PromptTemplate(
    id="adapt.insert_objective",
    schema="inserted_objective",
    body=(
        "Propose one new analytical objective for the dataset below.\n\n"
        "Dataset summary:\n{summary}\n\n"
        "The objective must analyze the field(s): {fields}\n"
        "It must relate to the anchor segment below by a '{relation}' "
        "logic.\n"
        "Anchor segment:\n{anchor_context}\n\n"
        "Phrase the objective as a concrete question answerable from the "
        "dataset."
        + _STRUCTURED_SUFFIX
        + "\nFields: objective (string)."
    ),
))

_register(PromptTemplate(
    id="adapt.codegen",
    body=(
        "Write a script that fulfils the analytical objective below against "
        "the dataset, producing a transformed table and a chart.\n\n"
        "Objective: {objective}\n\n"
        "Dataset summary:\n{summary}\n\n"
        "Reference segment (for inspiration, a different dataset):\n"
        "{reference_context}\n\n"
        "First outline your plan step by step, then give the complete "
        "script in one fenced code block.\n\n"
        "Execution contract:\n{contract}\n\n"
        "Use the right chart type and consider the data field types."
    ),
))

_register(PromptTemplate(
    id="adapt.codefix",
    body=(
        "The script below failed when executed. Fix it.\n\n"
        "Objective: {objective}\n\n"
        "Dataset summary:\n{summary}\n\n"
        "Failed script:\n```\n{script}\n```\n\n"
        "Failure:\n{error}\n\n"
        "Execution contract:\n{contract}\n\n"
        "Reply with the corrected complete script in one fenced code block."
    ),
))

_register(PromptTemplate(
    id="adapt.insight",
    body=(
        "Describe the patterns observed in the transformed data below, "
        "answering the analytical objective. Produce a clear, informative "
        "narrative paragraph.\n\n"
        "Objective: {objective}\n\n"
        "Transformed table:\n{table}\n\n"
        "A chart of this table accompanies the text.\n\n"
        "Reference narrative (how a similar finding was described for a "
        "different dataset):\n{reference_insight}\n\n"
        "Ground every claim in the table values. Reply with the narrative "
        "text only."
    ),
))

_register(PromptTemplate(
    id="adapt.flag_nonanalytical",
    schema="nonanalytical_flags",
    body=(
        "The narrative below was generated from a transformed data table. "
        "Identify sentences that serve non-data-analysis purposes: "
        "background knowledge, speculation, policy commentary, or anything "
        "not grounded in the table.\n\n"
        "Table:\n{table}\n\n"
        "Narrative (sentences numbered from 1):\n{numbered}\n\n"
        "Report the sentence numbers that are not grounded in the data. "
        "Report an empty list when every sentence is data-grounded."
        + _STRUCTURED_SUFFIX
        + "\nFields: non_analytical_sentences (array of integers)."
    ),
))

_register(PromptTemplate(
    id="organize.title",
    schema="report_title",
    body=(
        "Generate a title for the data report whose section contents are "
        "summarized below. The title should capture the main findings.\n\n"
        "{content}"
        + _STRUCTURED_SUFFIX
        + "\nFields: title (string)."
    ),
))

_register(PromptTemplate(
    id="organize.heading",
    schema="section_heading",
    body=(
        "Generate a concise section heading for the report section whose "
        "contents are summarized below.\n\n"
        "{content}"
        + _STRUCTURED_SUFFIX
        + "\nFields: heading (string)."
    ),
))


_FIELD_LIST = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "properties": {
            "name": {"type": "string"},
            "description": {"type": "string"},
        },
        "required": ["name", "description"],
    },
}

SCHEMAS: dict[str, dict] = {
    "data_summary": {
        "type": "object",
        "properties": {
            "dataset_description": {"type": "string", "minLength": 1},
            "fields": _FIELD_LIST,
        },
        "required": ["dataset_description", "fields"],
    },
    "segment_summary": {
        "type": "object",
        "properties": {
            "objective": {"type": "string", "minLength": 1},
            "depends_on": {"type": ["integer", "null"]},
            "relation": {"type": "string"},
        },
        "required": ["objective", "depends_on", "relation"],
    },
    "report_fields": {
        "type": "object",
        "properties": {"fields": _FIELD_LIST},
        "required": ["fields"],
    },
    "correction": {
        "type": "object",
        "properties": {
            "result": {"enum": ["adapted", "none"]},
            "objective": {"type": "string"},
            "reason": {"type": "string"},
            "rationale": {"type": "string"},
            "dimensions": {
                "type": "object",
                "properties": {
                    "data_fields": {"type": "string"},
                    "insight_dependency": {"type": "string"},
                    "data_scope": {"type": "string"},
                },
                "required": ["data_fields", "insight_dependency", "data_scope"],
            },
        },
        "required": ["result", "dimensions"],
    },
    "inserted_objective": {
        "type": "object",
        "properties": {"objective": {"type": "string", "minLength": 1}},
        "required": ["objective"],
    },
    "nonanalytical_flags": {
        "type": "object",
        "properties": {
            "non_analytical_sentences": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1},
            },
        },
        "required": ["non_analytical_sentences"],
    },
    "report_title": {
        "type": "object",
        "properties": {"title": {"type": "string", "minLength": 1}},
        "required": ["title"],
    },
    "section_heading": {
        "type": "object",
        "properties": {"heading": {"type": "string", "minLength": 1}},
        "required": ["heading"],
    },
}
