"""The analysis stage: adapt one segment at a time to the new dataset.

For each segment in dependency order the engine corrects (or takes as
given) the analytical objective, generates transformation code and runs it
in the sandbox with an execute-diagnose-retry loop, then writes the insight
narrative and flags sentences that are not grounded in the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .config import AdaptConfig
from .errors import MalformedLlmOutput, TransformationFailed, UnknownField
from .gateway import GatewaySession, extract_code_block
from .ingest import DataSummary
from .model import AttemptEntry, LogicalRelation, SegmentStatus, TransformationRecord
from .sandbox import CONTRACT_TEXT, ExecutionResult, SandboxRunner
from .util import split_sentences

_NO_PARENT = "(none: this objective starts directly from the dataset)"


@dataclass
class CorrectionOutcome:
    """Result of the three-dimension objective check."""

    adapted: bool
    objective: str | None = None        # set when adapted
    reason: str | None = None           # set when not adaptable
    rationale: str = ""
    dimension_notes: dict[str, str] = field(default_factory=dict)


@dataclass
class GeneratedSegment:
    """Everything the engine produced for one segment."""

    segment_id: str
    adapted_objective: str
    record: TransformationRecord | None = None
    narrative: str = ""
    non_analytical_spans: list[tuple[int, int]] = field(default_factory=list)
    status: SegmentStatus = SegmentStatus.PENDING
    failure_reason: str | None = None
    correction: CorrectionOutcome | None = None

    def to_json(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "adapted_objective": self.adapted_objective,
            "record": self.record.to_json() if self.record else None,
            "narrative": self.narrative,
            "non_analytical_spans": [list(s) for s in self.non_analytical_spans],
            "status": self.status.value,
            "failure_reason": self.failure_reason,
        }

    @classmethod
    def from_json(cls, data: dict) -> GeneratedSegment:
        return cls(
            segment_id=data["segment_id"],
            adapted_objective=data.get("adapted_objective", ""),
            record=(
                TransformationRecord.from_json(data["record"])
                if data.get("record")
                else None
            ),
            narrative=data.get("narrative", ""),
            non_analytical_spans=[tuple(s) for s in data.get("non_analytical_spans", [])],
            status=SegmentStatus(data.get("status", "pending")),
            failure_reason=data.get("failure_reason"),
        )


def _parent_context(parent: GeneratedSegment | None, head_rows: int) -> str:
    if parent is None:
        return _NO_PARENT
    parts = [f"Objective: {parent.adapted_objective}"]
    if parent.record and parent.record.transformed_table:
        parts.append(
            "Transformed table (head):\n"
            + parent.record.transformed_table.head(head_rows).render()
        )
    if parent.narrative:
        parts.append(f"Insight: {parent.narrative}")
    return "\n".join(parts)


def result_diagnosis(result: ExecutionResult) -> str | None:
    """Failure description for the retry prompt, or None when acceptable.

    Beyond hard execution failures, a successful run with an empty table or
    an entirely null column counts as an unexpected result and goes back to
    the model.
    """
    if not result.ok:
        label = result.status.value.replace("_", " ")
        return f"{label}: {result.stderr_excerpt}".strip()
    table = result.transformed_table
    if table is None or not table.rows:
        return "unexpected result: the transformed table is empty"
    for i, name in enumerate(table.columns):
        column = [row[i].strip() for row in table.rows]
        if all(v == "" or v.lower() in ("na", "n/a", "null") for v in column):
            return f"unexpected result: column {name!r} is entirely null"
    return None


class AdaptEngine:
    def __init__(
        self,
        session: GatewaySession,
        sandbox: SandboxRunner,
        summary: DataSummary,
        dataset_path: Path,
        config: AdaptConfig | None = None,
    ):
        self.session = session
        self.sandbox = sandbox
        self.summary = summary
        self.dataset_path = Path(dataset_path)
        self.config = config or AdaptConfig()

    # -- objective correction / insertion ------------------------------------

    def correct_objective(
        self,
        objective: str,
        relation: LogicalRelation,
        parent: GeneratedSegment | None,
        reference_context: str = "",
    ) -> CorrectionOutcome:
        """One structured pass over the three dimensions, in order:
        field alignment, dependency validity, data scope."""

        def check(payload: dict) -> None:
            if payload["result"] == "adapted" and not payload.get("objective"):
                raise MalformedLlmOutput("result 'adapted' requires an objective")
            if payload["result"] == "none" and not payload.get("reason"):
                raise MalformedLlmOutput("result 'none' requires a reason")

        payload = self.session.complete_structured(
            "adapt.correct_objective",
            {
                "objective": objective,
                "summary": self.summary.render(),
                "relation": relation.value,
                "parent_context": _parent_context(parent, self.config.table_head_rows)
                + (f"\nReference segment:\n{reference_context}" if reference_context else ""),
            },
            check=check,
        )
        if payload["result"] == "none":
            return CorrectionOutcome(
                adapted=False,
                reason=payload["reason"],
                rationale=payload.get("rationale", ""),
                dimension_notes=dict(payload["dimensions"]),
            )
        return CorrectionOutcome(
            adapted=True,
            objective=payload["objective"],
            rationale=payload.get("rationale", ""),
            dimension_notes=dict(payload["dimensions"]),
        )

    def insert_objective(
        self,
        fields: list[str],
        relation: LogicalRelation,
        anchor: GeneratedSegment | None,
    ) -> str:
        """Candidate objective for a user-inserted segment."""
        known = set(self.summary.field_names())
        unknown = [f for f in fields if f not in known]
        if unknown:
            raise UnknownField(f"unknown dataset field(s): {', '.join(unknown)}")
        payload = self.session.complete_structured(
            "adapt.insert_objective",
            {
                "summary": self.summary.render(),
                "fields": ", ".join(fields),
                "relation": relation.value,
                "anchor_context": _parent_context(anchor, self.config.table_head_rows),
            },
        )
        return payload["objective"]

    # -- transformation -------------------------------------------------------

    def generate_transformation(
        self,
        objective: str,
        reference_context: str = "",
    ) -> TransformationRecord:
        """Plan-then-code generation with an execute-retry loop.

        Runs at most ``adapt.max_attempts`` attempts; every failed run's
        diagnosis (stderr excerpt or unexpected-result note) is fed back to
        the model before the next attempt.
        """
        attempt_log: list[AttemptEntry] = []
        script = extract_code_block(
            self.session.complete(
                "adapt.codegen",
                {
                    "objective": objective,
                    "summary": self.summary.render(),
                    "reference_context": reference_context or "(none)",
                    "contract": CONTRACT_TEXT,
                },
            )
        )
        last_result: ExecutionResult | None = None
        for attempt in range(1, self.config.max_attempts + 1):
            result = self.sandbox.run_fresh(script, self.dataset_path)
            last_result = result
            diagnosis = result_diagnosis(result)
            if diagnosis is None:
                attempt_log.append(AttemptEntry(script=script, error=None))
                return TransformationRecord(
                    script=script,
                    transformed_table=result.transformed_table,
                    chart=str(result.chart_path) if result.chart_path else None,
                    attempts=attempt,
                    attempt_log=attempt_log,
                )
            attempt_log.append(AttemptEntry(script=script, error=diagnosis))
            if attempt == self.config.max_attempts:
                break
            script = extract_code_block(
                self.session.complete(
                    "adapt.codefix",
                    {
                        "objective": objective,
                        "summary": self.summary.render(),
                        "script": script,
                        "error": diagnosis,
                        "contract": CONTRACT_TEXT,
                    },
                )
            )
        raise TransformationFailed(attempt_log)

    # -- insight --------------------------------------------------------------

    def generate_insight(
        self,
        objective: str,
        record: TransformationRecord,
        reference_insight: str = "",
    ) -> tuple[str, list[tuple[int, int]]]:
        """Narrative for the transformed table plus non-analytical spans."""
        table_text = (
            record.transformed_table.render() if record.transformed_table else "(empty)"
        )
        narrative = self.session.complete(
            "adapt.insight",
            {
                "objective": objective,
                "table": table_text,
                "reference_insight": reference_insight or "(none)",
            },
        ).strip()

        sentences = split_sentences(narrative)
        numbered = "\n".join(
            f"{i + 1}. {narrative[s:e]}" for i, (s, e) in enumerate(sentences)
        )
        payload = self.session.complete_structured(
            "adapt.flag_nonanalytical",
            {"table": table_text, "numbered": numbered},
        )
        spans: list[tuple[int, int]] = []
        for index in sorted(set(payload["non_analytical_sentences"])):
            if 1 <= index <= len(sentences):
                spans.append(sentences[index - 1])
        return narrative, spans

    # -- whole segment ----------------------------------------------------------

    def generate_segment(
        self,
        segment_id: str,
        objective: str,
        relation: LogicalRelation,
        parent: GeneratedSegment | None,
        reference_context: str = "",
        reference_insight: str = "",
        skip_correction: bool = False,
        on_phase=None,
    ) -> GeneratedSegment:
        """Correction, transformation and insight for one segment.

        ``skip_correction`` is used for inserted segments and user-edited
        objectives, both of which are already phrased for the new dataset.
        A correction outcome of "none" fails the segment without touching
        the sandbox. ``on_phase(name, payload)`` fires as each stage lands
        (objective, code, artifacts, narrative) so callers can stream
        progress.
        """

        def phase(name: str, payload: dict) -> None:
            if on_phase is not None:
                on_phase(name, payload)

        correction: CorrectionOutcome | None = None
        if skip_correction:
            adapted = objective
            phase("objective", {"segment": segment_id, "objective": adapted})
        else:
            correction = self.correct_objective(
                objective, relation, parent, reference_context
            )
            if not correction.adapted:
                phase(
                    "objective",
                    {"segment": segment_id, "objective": None,
                     "reason": correction.reason},
                )
                return GeneratedSegment(
                    segment_id=segment_id,
                    adapted_objective="",
                    status=SegmentStatus.FAILED,
                    failure_reason=correction.reason,
                    correction=correction,
                )
            adapted = correction.objective or objective
            phase("objective", {"segment": segment_id, "objective": adapted})

        record = self.generate_transformation(adapted, reference_context)
        phase(
            "code",
            {"segment": segment_id, "script": record.script, "attempts": record.attempts},
        )
        phase(
            "artifacts",
            {
                "segment": segment_id,
                "table": record.transformed_table.to_json()
                if record.transformed_table
                else None,
            },
        )
        narrative, spans = self.generate_insight(adapted, record, reference_insight)
        phase(
            "narrative",
            {"segment": segment_id, "narrative": narrative,
             "spans": [list(s) for s in spans]},
        )
        return GeneratedSegment(
            segment_id=segment_id,
            adapted_objective=adapted,
            record=record,
            narrative=narrative,
            non_analytical_spans=spans,
            status=SegmentStatus.GENERATED,
            correction=correction,
        )

    def apply_user_edit(
        self,
        segment: GeneratedSegment,
        edit: dict,
    ) -> GeneratedSegment:
        """Apply direct edits to objective, script, or narrative.

        Script edits trigger one sandbox re-run and extend the attempt log;
        a failing edited script is preserved for further fixing and the
        status stays as it was. Narrative edits clear stale highlight spans.
        """
        out = GeneratedSegment(
            segment_id=segment.segment_id,
            adapted_objective=edit.get("objective", segment.adapted_objective),
            record=segment.record,
            narrative=segment.narrative,
            non_analytical_spans=list(segment.non_analytical_spans),
            status=segment.status,
            failure_reason=segment.failure_reason,
            correction=segment.correction,
        )
        if "narrative" in edit:
            out.narrative = edit["narrative"]
            out.non_analytical_spans = []
        if "script" in edit:
            script = edit["script"]
            result = self.sandbox.run_fresh(script, self.dataset_path)
            diagnosis = result_diagnosis(result)
            record = out.record or TransformationRecord(script=script, attempt_log=[])
            log = list(record.attempt_log)
            if diagnosis is None:
                log.append(AttemptEntry(script=script, error=None))
                out.record = TransformationRecord(
                    script=script,
                    transformed_table=result.transformed_table,
                    chart=str(result.chart_path) if result.chart_path else None,
                    attempts=len(log),
                    attempt_log=log,
                )
            else:
                log.append(AttemptEntry(script=script, error=diagnosis))
                out.record = TransformationRecord(
                    script=script,
                    transformed_table=record.transformed_table,
                    chart=record.chart,
                    attempts=len(log),
                    attempt_log=log,
                )
        return out
