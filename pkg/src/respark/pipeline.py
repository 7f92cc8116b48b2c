"""High-level operations shared by the CLI and the HTTP service.

Each public method here is the single code path for one user-visible
operation: ingesting a dataset, registering and segmenting a report,
ranking, driving a generation session, organizing and exporting. The CLI
calls these in-process; the service wraps them in endpoints.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .adapt import AdaptEngine, GeneratedSegment
from .config import AppConfig
from .errors import (
    DependencyOrderError,
    MarkupError,
    ResparkError,
    UnknownSegment,
)
from .gateway import AuditRecord, Gateway, GatewaySession, Transcript
from .ingest import DataSummary, load_table, profile_table, summarize_dataset
from .model import (
    ROOT_ID,
    AnalysisSegment,
    DependencyEdge,
    DependencyGraph,
    InvalidGraph,
    SegmentSource,
    SegmentStatus,
    blocked_segments,
    field_usage_counts,
    generation_order,
    insert_segment,
    parse_relation,
    remove_segment,
    validate_graph,
)
from .organize import (
    ReportOutline,
    export_report,
    inherit_structure,
    place_inserted,
    regenerate_titles,
    regroup,
)
from .ranking import EmbeddingCache, RankedReport, Ranker, ReportIndexEntry, infer_report_fields
from .report import (
    BlockKind,
    ReportDoc,
    SegmentSpec,
    parse_report,
    segment_report,
)
from .sandbox import SandboxRunner
from .store import Store


@dataclass
class SessionState:
    """Everything one generation session knows; fully JSON-serializable."""

    id: str
    dataset_id: str
    report_id: str
    graph: DependencyGraph
    generated: dict[str, GeneratedSegment] = dc_field(default_factory=dict)
    outline: ReportOutline | None = None
    event_seq: int = 0
    events: list[dict] = dc_field(default_factory=list)
    llm_counters: dict[str, int] = dc_field(default_factory=dict)
    audit: list[AuditRecord] = dc_field(default_factory=list)
    edited_objectives: list[str] = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "dataset_id": self.dataset_id,
            "report_id": self.report_id,
            "graph": self.graph.to_json(),
            "generated": {sid: g.to_json() for sid, g in self.generated.items()},
            "outline": self.outline.to_json() if self.outline else None,
            "event_seq": self.event_seq,
            "events": self.events,
            "llm_counters": self.llm_counters,
            "audit": [r.to_json() for r in self.audit],
            "edited_objectives": list(self.edited_objectives),
        }

    @classmethod
    def from_json(cls, data: dict) -> SessionState:
        return cls(
            id=data["id"],
            dataset_id=data["dataset_id"],
            report_id=data["report_id"],
            graph=DependencyGraph.from_json(data["graph"]),
            generated={
                sid: GeneratedSegment.from_json(g)
                for sid, g in data.get("generated", {}).items()
            },
            outline=(
                ReportOutline.from_json(data["outline"]) if data.get("outline") else None
            ),
            event_seq=data.get("event_seq", 0),
            events=data.get("events", []),
            llm_counters=data.get("llm_counters", {}),
            audit=[AuditRecord.from_json(r) for r in data.get("audit", [])],
            edited_objectives=list(data.get("edited_objectives", [])),
        )


class Pipeline:
    def __init__(
        self,
        store: Store,
        config: AppConfig,
        transcript: Transcript | None = None,
    ):
        self.store = store
        self.config = config
        if transcript is None and config.llm.transcript:
            transcript = Transcript.load(config.llm.transcript)
        self.gateway = Gateway(config.llm, transcript)
        self.sandbox = SandboxRunner(
            config=config.sandbox, base_dir=store.path / "sandbox-runs"
        )
        self.embedding_cache = EmbeddingCache(
            model=config.llm.embedding_model,
            entries=store.manifest.get("embedding_cache", {}).get("entries", {}),
        )

    # -- gateway sessions -------------------------------------------------------

    def fresh_gateway(self) -> GatewaySession:
        return self.gateway.session()

    def bound_gateway(self, state: SessionState) -> GatewaySession:
        return self.gateway.session(counters=state.llm_counters, audit=state.audit)

    # -- events -------------------------------------------------------------------

    def emit(self, state: SessionState, kind: str, payload: dict, on_event=None) -> dict:
        state.event_seq += 1
        event = {"seq": state.event_seq, "kind": kind, "payload": payload}
        state.events.append(event)
        if on_event is not None:
            on_event(event)
        return event

    # -- pre-processing -------------------------------------------------------------

    def ingest_dataset(self, csv_bytes: bytes, name: str) -> tuple[str, DataSummary]:
        """Profile and summarize a dataset, then persist it."""
        table = load_table(csv_bytes, name, delimiter=self.config.ingest.delimiter)
        profiles = profile_table(table)
        summary = summarize_dataset(table, profiles, self.fresh_gateway())
        dataset_id = self.store.add_dataset(csv_bytes, name, summary.to_json())
        return dataset_id, summary

    def add_report(
        self,
        text: str,
        images: dict[str, bytes] | None = None,
        source_uri: str = "",
    ) -> tuple[str, ReportDoc, list[SegmentSpec], list[int]]:
        """Parse, segment, and index a reference report (eager pre-processing)."""
        images = images or {}
        doc = parse_report(text, source_uri=source_uri)
        for block in doc.blocks:
            if block.kind == BlockKind.CHART and block.image not in images:
                raise MarkupError(f"dangling image reference: {block.image}")
        session = self.fresh_gateway()
        specs, non_analytical = segment_report(doc, session)
        entry = ReportIndexEntry(
            report_id="",
            title=doc.title,
            headings=[b.text for b in doc.blocks if b.kind == BlockKind.HEADING],
            objectives=[s.objective for s in specs],
        )
        infer_report_fields(entry, doc, session)
        report_id = self.store.add_report(
            doc.to_json(),
            images,
            [s.to_json() for s in specs],
            non_analytical,
            entry.to_json(),
        )
        entry.report_id = report_id
        self.store.update_report_index(report_id, entry.to_json())
        return report_id, doc, specs, non_analytical

    def rank_for_dataset(self, dataset_id: str) -> list[RankedReport]:
        summary = DataSummary.from_json(self.store.dataset_summary(dataset_id))
        entries = []
        for report_id in self.store.report_ids():
            entry = ReportIndexEntry.from_json(self.store.report_index(report_id))
            entry.report_id = report_id
            entries.append(entry)
        ranker = Ranker(
            self.fresh_gateway(),
            self.embedding_cache,
            field_weight=self.config.ranking.field_weight,
        )
        ranked = ranker.rank_reports(summary, entries)
        self.store.manifest["embedding_cache"] = {
            "model": self.embedding_cache.model,
            "entries": self.embedding_cache.entries,
        }
        self.store.flush()
        return ranked

    # -- sessions ------------------------------------------------------------------

    def create_session(self, dataset_id: str, report_id: str) -> SessionState:
        """Load the reference's segments as pending nodes of a new session."""
        if not self.store.has_dataset(dataset_id):
            raise UnknownSegment(f"unknown dataset: {dataset_id}")
        if not self.store.has_report(report_id):
            raise UnknownSegment(f"unknown report: {report_id}")
        spec_dicts, _ = self.store.report_segments(report_id)
        specs = [SegmentSpec.from_json(s) for s in spec_dicts]
        segments: list[AnalysisSegment] = []
        edges: list[DependencyEdge] = []
        for i, spec in enumerate(specs):
            sid = str(i + 1)
            segments.append(
                AnalysisSegment(
                    id=sid,
                    objective=spec.objective,
                    source=SegmentSource.FROM_REFERENCE,
                    status=SegmentStatus.PENDING,
                    reference_blocks=list(spec.block_ids),
                )
            )
            parent = ROOT_ID if spec.depends_on is None else str(spec.depends_on + 1)
            edges.append(DependencyEdge(source=parent, target=sid, relation=spec.relation))
        graph = DependencyGraph(segments=segments, edges=edges, next_id=len(specs) + 1)
        report = validate_graph(graph)
        if not report.ok:
            raise InvalidGraph(report)
        state = SessionState(
            id=self.store.new_session_id(),
            dataset_id=dataset_id,
            report_id=report_id,
            graph=graph,
        )
        self.emit(state, "session.created", {"session": state.id})
        self.save(state)
        return state

    def save(self, state: SessionState) -> None:
        self.store.save_session(state.id, state.to_json())

    def load(self, session_id: str) -> SessionState:
        return SessionState.from_json(self.store.load_session(session_id))

    # -- generation -------------------------------------------------------------------

    def _engine(self, state: SessionState) -> AdaptEngine:
        summary = DataSummary.from_json(self.store.dataset_summary(state.dataset_id))
        return AdaptEngine(
            session=self.bound_gateway(state),
            sandbox=self.sandbox,
            summary=summary,
            dataset_path=self.store.dataset_csv_path(state.dataset_id),
            config=self.config.adapt,
        )

    def _reference_context(self, state: SessionState, segment: AnalysisSegment) -> tuple[str, str]:
        """(context text, reference insight) from the segment's source blocks."""
        if not segment.reference_blocks:
            return "", ""
        doc = ReportDoc.from_json(self.store.report_doc(state.report_id))
        texts: list[str] = []
        charts: list[str] = []
        for bid in segment.reference_blocks:
            block = doc.blocks[bid]
            if block.kind == BlockKind.CHART:
                charts.append(block.image or "")
            elif block.text:
                texts.append(block.text)
        insight = " ".join(texts)
        parts = []
        if insight:
            parts.append(f"Narrative: {insight}")
        for image in charts:
            parts.append(f"[chart: {image}]")
        return "\n".join(parts), insight

    def _stash_record(self, generated: GeneratedSegment) -> None:
        """Move the chart into the content-addressed store and drop the workdir.

        Keeps session state free of ephemeral sandbox paths, which is what
        makes replays byte-identical.
        """
        record = generated.record
        if record is None or not record.chart:
            return
        chart_path = Path(record.chart)
        if not chart_path.is_absolute() or not chart_path.is_file():
            return
        rel = self.store.put_blob(chart_path.read_bytes(), ".png")
        workdir = chart_path.parent.parent
        record.chart = rel
        if workdir.is_dir() and workdir.parent == self.sandbox.base_dir:
            shutil.rmtree(workdir, ignore_errors=True)

    def generate(
        self,
        state: SessionState,
        segment_id: str,
        on_event=None,
    ) -> GeneratedSegment:
        """Run the adaptation pipeline for one segment, parent first.

        Emits one event per landed phase so clients can stream progress.
        """
        segment = state.graph.segment(segment_id)
        parent_id = state.graph.parent_of(segment_id)
        if parent_id != ROOT_ID:
            parent_status = state.graph.segment(parent_id).status
            if parent_status not in (SegmentStatus.GENERATED, SegmentStatus.APPLIED):
                raise DependencyOrderError(
                    f"segment {segment_id} depends on {parent_id} "
                    f"which is {parent_status.value}"
                )
        edge = state.graph.parent_edge(segment_id)
        relation = edge.relation if edge else parse_relation("elaboration")
        parent_generated = state.generated.get(parent_id)
        reference_context, reference_insight = self._reference_context(state, segment)
        skip_correction = (
            segment.source == SegmentSource.INSERTED
            or segment_id in state.edited_objectives
        )
        engine = self._engine(state)

        def on_phase(name: str, payload: dict) -> None:
            self.emit(state, f"generation.{name}", payload, on_event)

        try:
            result = engine.generate_segment(
                segment_id,
                segment.objective,
                relation,
                parent_generated,
                reference_context=reference_context,
                reference_insight=reference_insight,
                skip_correction=skip_correction,
                on_phase=on_phase,
            )
        except ResparkError:
            # The gateway ordinals consumed so far (and any phase events)
            # must survive the failure, or a restarted session would replay
            # the wrong transcript entries.
            self.save(state)
            raise
        self._stash_record(result)
        state.generated[segment_id] = result
        segment.status = result.status
        if result.status == SegmentStatus.GENERATED:
            segment.objective = result.adapted_objective
            segment.transformation = result.record
            segment.insight = result.narrative
        else:
            segment.transformation = None
            segment.insight = None
        self.emit(
            state,
            "segment.updated",
            {"segment": segment_id, "status": segment.status.value,
             "failure_reason": result.failure_reason},
            on_event,
        )
        self.save(state)
        return result

    def generate_all_pending(self, state: SessionState, on_event=None) -> list[str]:
        """Generate every pending segment in dependency order; returns the
        ids attempted. Children blocked by a failed parent are skipped."""
        attempted: list[str] = []
        for segment_id in generation_order(state.graph):
            segment = state.graph.segment(segment_id)
            if segment.status != SegmentStatus.PENDING:
                continue
            if segment_id in blocked_segments(state.graph):
                continue
            self.generate(state, segment_id, on_event)
            attempted.append(segment_id)
        return attempted

    def apply(self, state: SessionState, segment_id: str, on_event=None) -> None:
        segment = state.graph.segment(segment_id)
        if segment.status != SegmentStatus.GENERATED:
            raise DependencyOrderError(
                f"segment {segment_id} is {segment.status.value}, not generated"
            )
        segment.status = SegmentStatus.APPLIED
        state.generated[segment_id].status = SegmentStatus.APPLIED
        self.emit(state, "segment.updated",
                  {"segment": segment_id, "status": "applied"}, on_event)
        self.save(state)

    def edit(self, state: SessionState, segment_id: str, edit: dict, on_event=None) -> None:
        """Apply user edits; objective edits also mark correction as settled."""
        segment = state.graph.segment(segment_id)
        if "objective" in edit:
            segment.objective = edit["objective"]
            if segment_id not in state.edited_objectives:
                state.edited_objectives.append(segment_id)
        generated = state.generated.get(segment_id)
        if generated is not None:
            engine = self._engine(state)
            updated = engine.apply_user_edit(generated, edit)
            self._stash_record(updated)
            state.generated[segment_id] = updated
            if updated.status == SegmentStatus.GENERATED:
                segment.transformation = updated.record
                segment.insight = updated.narrative
        elif set(edit) - {"objective"}:
            raise UnknownSegment(
                f"segment {segment_id} has no generated content to edit"
            )
        self.emit(state, "segment.updated",
                  {"segment": segment_id, "status": segment.status.value}, on_event)
        self.save(state)

    def regenerate(self, state: SessionState, segment_id: str, on_event=None) -> GeneratedSegment:
        segment = state.graph.segment(segment_id)
        segment.status = SegmentStatus.PENDING
        return self.generate(state, segment_id, on_event)

    def insert_segment_op(
        self,
        state: SessionState,
        fields: list[str],
        relation: str,
        anchor: str,
        on_event=None,
    ) -> str:
        """Insert a user-defined segment: objective from the model, node in
        the graph, placement in the outline when one exists."""
        parsed = parse_relation(relation)
        anchor_generated = state.generated.get(anchor) if anchor != ROOT_ID else None
        engine = self._engine(state)
        try:
            objective = engine.insert_objective(fields, parsed, anchor_generated)
        except ResparkError:
            self.save(state)  # persist any consumed ordinals
            raise
        state.graph, new_id = insert_segment(state.graph, anchor, parsed, objective)
        if state.outline is not None:
            state.outline = place_inserted(state.outline, new_id, state.graph)
        self.emit(
            state,
            "graph.updated",
            {"inserted": new_id, "anchor": anchor, "relation": parsed.value,
             "objective": objective},
            on_event,
        )
        self.save(state)
        return new_id

    def remove(self, state: SessionState, segment_id: str, on_event=None) -> None:
        state.graph = remove_segment(state.graph, segment_id)
        state.generated.pop(segment_id, None)
        if segment_id in state.edited_objectives:
            state.edited_objectives.remove(segment_id)
        if state.outline is not None:
            for section in state.outline.sections:
                if segment_id in section.segment_ids:
                    section.segment_ids.remove(segment_id)
            if segment_id in state.outline.orphans:
                state.outline.orphans.remove(segment_id)
        self.emit(state, "graph.updated", {"removed": segment_id}, on_event)
        self.save(state)

    def field_usage(self, state: SessionState) -> dict[str, int]:
        summary = DataSummary.from_json(self.store.dataset_summary(state.dataset_id))
        return field_usage_counts(state.graph, summary.field_names())

    # -- organization -----------------------------------------------------------------

    def ensure_outline(self, state: SessionState) -> ReportOutline:
        if state.outline is None:
            doc = ReportDoc.from_json(self.store.report_doc(state.report_id))
            _, non_analytical = self.store.report_segments(state.report_id)
            state.outline = inherit_structure(doc, state.graph, non_analytical)
            self.save(state)
        return state.outline

    def regroup_outline(self, state: SessionState, assignment: list[dict], on_event=None) -> ReportOutline:
        outline = self.ensure_outline(state)
        state.outline = regroup(outline, assignment)
        self.emit(state, "outline.updated", {"reason": "regroup"}, on_event)
        self.save(state)
        return state.outline

    def regenerate_outline_titles(self, state: SessionState, scope: str, on_event=None) -> ReportOutline:
        outline = self.ensure_outline(state)
        try:
            state.outline = regenerate_titles(
                outline, state.generated, self.bound_gateway(state), scope=scope
            )
        except ResparkError:
            self.save(state)  # persist any consumed ordinals
            raise
        self.emit(state, "outline.updated", {"reason": "titles", "scope": scope}, on_event)
        self.save(state)
        return state.outline

    def set_title(self, state: SessionState, title: str, on_event=None) -> ReportOutline:
        outline = self.ensure_outline(state)
        outline.title = title
        self.emit(state, "outline.updated", {"reason": "manual_title"}, on_event)
        self.save(state)
        return outline

    def export(
        self,
        state: SessionState,
        fmt: str,
        out_dir: Path,
        self_contained: bool = False,
        on_event=None,
    ) -> Path:
        outline = self.ensure_outline(state)
        resolved: dict[str, GeneratedSegment] = {}
        for sid, generated in state.generated.items():
            copy = GeneratedSegment.from_json(generated.to_json())
            if copy.record is not None and copy.record.chart:
                copy.record.chart = str(self.store.blob_path(copy.record.chart))
            resolved[sid] = copy
        path = export_report(outline, resolved, fmt, Path(out_dir),
                             self_contained=self_contained)
        self.emit(state, "export.ready", {"format": fmt}, on_event)
        self.save(state)
        return path

    # -- scenario driving (headless CLI runs) -------------------------------------------

    def run_scenario(self, state: SessionState, steps: list[dict], on_event=None) -> None:
        """Apply recorded user actions after the initial generation pass."""
        for step in steps:
            action = step.get("action")
            if action == "remove":
                self.remove(state, step["segment"], on_event)
            elif action == "insert":
                new_id = self.insert_segment_op(
                    state,
                    fields=step["fields"],
                    relation=step["relation"],
                    anchor=step["anchor"],
                    on_event=on_event,
                )
                self.generate(state, new_id, on_event)
            elif action == "regenerate_title":
                self.regenerate_outline_titles(state, step.get("scope", "report"), on_event)
            elif action == "regroup":
                self.regroup_outline(state, step["sections"], on_event)
            else:
                raise ResparkError(f"unknown scenario action: {action!r}")
