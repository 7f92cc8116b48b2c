"""Core domain types: analysis segments and the dependency tree over them.

A report's analysis logic is a sequence of segments, each pairing an
analytical objective with a data transformation and the insight drawn from
it. Segments either build on an earlier segment's insight or originate
directly from the dataset, so the whole structure is a tree rooted at a
virtual dataset node. This module owns that tree: validation, generation
ordering, insertion/removal, and field-usage accounting. It is pure data
manipulation; all LLM work happens in other modules.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import InvalidGraph, UnknownAnchor, UnknownSegment
from .util import word_boundary_pattern

# Identifier of the virtual dataset node every independent segment hangs off.
ROOT_ID = "root"


class LogicalRelation(Enum):
    """The six relation types an edge can carry."""

    SIMILARITY = "similarity"
    CONTRAST = "contrast"
    CAUSE_EFFECT = "cause_effect"
    ELABORATION = "elaboration"
    GENERALIZATION = "generalization"
    TEMPORAL = "temporal"


# Accepted spellings when parsing relations out of LLM output or user input.
# "comparison" is folded into contrast.
_RELATION_ALIASES = {
    "similarity": LogicalRelation.SIMILARITY,
    "contrast": LogicalRelation.CONTRAST,
    "comparison": LogicalRelation.CONTRAST,
    "cause_effect": LogicalRelation.CAUSE_EFFECT,
    "cause-effect": LogicalRelation.CAUSE_EFFECT,
    "causeeffect": LogicalRelation.CAUSE_EFFECT,
    "elaboration": LogicalRelation.ELABORATION,
    "generalization": LogicalRelation.GENERALIZATION,
    "generalisation": LogicalRelation.GENERALIZATION,
    "temporal": LogicalRelation.TEMPORAL,
}


def parse_relation(text: str) -> LogicalRelation:
    key = text.strip().lower().replace(" ", "_")
    if key not in _RELATION_ALIASES:
        raise ValueError(f"unknown logical relation: {text!r}")
    return _RELATION_ALIASES[key]


class SegmentSource(Enum):
    FROM_REFERENCE = "from_reference"
    INSERTED = "inserted"


class SegmentStatus(Enum):
    PENDING = "pending"
    GENERATED = "generated"
    APPLIED = "applied"
    FAILED = "failed"


@dataclass
class TransformationRecord:
    """A generated transformation script plus everything its run produced."""

    script: str
    transformed_table: SmallTable | None = None
    chart: str | None = None            # artifact path or store reference
    attempts: int = 1
    attempt_log: list[AttemptEntry] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "script": self.script,
            "transformed_table": (
                self.transformed_table.to_json() if self.transformed_table else None
            ),
            "chart": self.chart,
            "attempts": self.attempts,
            "attempt_log": [a.to_json() for a in self.attempt_log],
        }

    @classmethod
    def from_json(cls, data: dict) -> TransformationRecord:
        return cls(
            script=data["script"],
            transformed_table=(
                SmallTable.from_json(data["transformed_table"])
                if data.get("transformed_table")
                else None
            ),
            chart=data.get("chart"),
            attempts=data.get("attempts", 1),
            attempt_log=[AttemptEntry.from_json(a) for a in data.get("attempt_log", [])],
        )


@dataclass
class AttemptEntry:
    """One execution attempt: the script that ran and how it ended."""

    script: str
    error: str | None = None            # None means success

    @property
    def succeeded(self) -> bool:
        return self.error is None

    def to_json(self) -> dict:
        return {"script": self.script, "error": self.error}

    @classmethod
    def from_json(cls, data: dict) -> AttemptEntry:
        return cls(script=data["script"], error=data.get("error"))


@dataclass
class SmallTable:
    """A small tabular result kept inline (transformed tables, previews)."""

    columns: list[str]
    rows: list[list[str]]

    def head(self, n: int) -> SmallTable:
        return SmallTable(columns=list(self.columns), rows=[list(r) for r in self.rows[:n]])

    def render(self) -> str:
        lines = [" | ".join(self.columns)]
        lines += [" | ".join(row) for row in self.rows]
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"columns": self.columns, "rows": self.rows}

    @classmethod
    def from_json(cls, data: dict) -> SmallTable:
        return cls(columns=list(data["columns"]), rows=[list(r) for r in data["rows"]])


@dataclass
class AnalysisSegment:
    """One unit of analysis: objective, transformation, insight.

    ``objective`` holds the current objective text: the reference report's
    wording when the segment is still pending, the adapted wording once
    generation ran. ``reference_blocks`` point back at the blocks of the
    source report (empty for user-inserted segments).
    """

    id: str
    objective: str
    transformation: TransformationRecord | None = None
    insight: str | None = None
    source: SegmentSource = SegmentSource.FROM_REFERENCE
    status: SegmentStatus = SegmentStatus.PENDING
    reference_blocks: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "objective": self.objective,
            "transformation": self.transformation.to_json() if self.transformation else None,
            "insight": self.insight,
            "source": self.source.value,
            "status": self.status.value,
            "reference_blocks": list(self.reference_blocks),
        }

    @classmethod
    def from_json(cls, data: dict) -> AnalysisSegment:
        return cls(
            id=data["id"],
            objective=data["objective"],
            transformation=(
                TransformationRecord.from_json(data["transformation"])
                if data.get("transformation")
                else None
            ),
            insight=data.get("insight"),
            source=SegmentSource(data.get("source", "from_reference")),
            status=SegmentStatus(data.get("status", "pending")),
            reference_blocks=list(data.get("reference_blocks", [])),
        )


@dataclass(frozen=True)
class DependencyEdge:
    source: str                         # segment id or ROOT_ID
    target: str
    relation: LogicalRelation

    def to_json(self) -> dict:
        return {"from": self.source, "to": self.target, "relation": self.relation.value}

    @classmethod
    def from_json(cls, data: dict) -> DependencyEdge:
        return cls(
            source=data["from"], target=data["to"],
            relation=parse_relation(data["relation"]),
        )


@dataclass
class Violation:
    kind: str                           # cycle | multi_parent | orphan | order_inversion | unknown_ref | self_edge | duplicate_id
    detail: str
    segments: list[str] = field(default_factory=list)


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        return "; ".join(f"{v.kind}: {v.detail}" for v in self.violations) or "ok"


@dataclass
class DependencyGraph:
    """Tree of analysis segments hanging off the virtual dataset root.

    ``next_id`` is a monotonically increasing allocation counter; ids are
    never reused after removal, which keeps replays deterministic.
    """

    segments: list[AnalysisSegment] = field(default_factory=list)
    edges: list[DependencyEdge] = field(default_factory=list)
    next_id: int = 1

    def segment(self, segment_id: str) -> AnalysisSegment:
        for seg in self.segments:
            if seg.id == segment_id:
                return seg
        raise UnknownSegment(f"no segment with id {segment_id!r}")

    def has_segment(self, segment_id: str) -> bool:
        return any(s.id == segment_id for s in self.segments)

    def parent_edge(self, segment_id: str) -> DependencyEdge | None:
        for edge in self.edges:
            if edge.target == segment_id:
                return edge
        return None

    def parent_of(self, segment_id: str) -> str:
        edge = self.parent_edge(segment_id)
        return edge.source if edge else ROOT_ID

    def children_of(self, segment_id: str) -> list[str]:
        return [e.target for e in self.edges if e.source == segment_id]

    def copy(self) -> DependencyGraph:
        return DependencyGraph(
            segments=[copy.deepcopy(s) for s in self.segments],
            edges=list(self.edges),
            next_id=self.next_id,
        )

    def to_json(self) -> dict:
        return {
            "root": ROOT_ID,
            "segments": [s.to_json() for s in self.segments],
            "edges": [e.to_json() for e in self.edges],
            "next_id": self.next_id,
        }

    @classmethod
    def from_json(cls, data: dict) -> DependencyGraph:
        return cls(
            segments=[AnalysisSegment.from_json(s) for s in data.get("segments", [])],
            edges=[DependencyEdge.from_json(e) for e in data.get("edges", [])],
            next_id=data.get("next_id", 1),
        )


def validate_graph(graph: DependencyGraph) -> ValidationReport:
    """Check the tree invariants; violations are data, not exceptions."""
    report = ValidationReport()
    ids = [s.id for s in graph.segments]
    id_set = set(ids)
    position = {sid: i for i, sid in enumerate(ids)}

    seen: set[str] = set()
    for sid in ids:
        if sid in seen:
            report.violations.append(
                Violation("duplicate_id", f"segment id {sid!r} appears more than once", [sid])
            )
        seen.add(sid)

    indegree: dict[str, int] = {sid: 0 for sid in id_set}
    for edge in graph.edges:
        if edge.source == edge.target:
            report.violations.append(
                Violation("self_edge", f"edge {edge.source!r} -> itself", [edge.source])
            )
            continue
        if edge.source != ROOT_ID and edge.source not in id_set:
            report.violations.append(
                Violation("unknown_ref", f"edge source {edge.source!r} is not a segment", [edge.source])
            )
        if edge.target not in id_set:
            report.violations.append(
                Violation("unknown_ref", f"edge target {edge.target!r} is not a segment", [edge.target])
            )
            continue
        indegree[edge.target] += 1
        if edge.source in position and position[edge.source] >= position[edge.target]:
            report.violations.append(
                Violation(
                    "order_inversion",
                    f"edge {edge.source!r} -> {edge.target!r} runs against segment order",
                    [edge.source, edge.target],
                )
            )

    for sid, degree in indegree.items():
        if degree == 0:
            report.violations.append(
                Violation("orphan", f"segment {sid!r} has no parent edge", [sid])
            )
        elif degree > 1:
            report.violations.append(
                Violation("multi_parent", f"segment {sid!r} has {degree} parents", [sid])
            )

    # Cycle detection over segment-to-segment edges.
    adjacency: dict[str, list[str]] = {sid: [] for sid in id_set}
    for edge in graph.edges:
        if edge.source in id_set and edge.target in id_set and edge.source != edge.target:
            adjacency[edge.source].append(edge.target)
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]) -> None:
        state[node] = 1
        for nxt in adjacency[node]:
            if state.get(nxt, 0) == 1:
                cycle = trail[trail.index(nxt):] if nxt in trail else [nxt]
                report.violations.append(
                    Violation("cycle", "cycle through " + " -> ".join(cycle + [nxt]), cycle)
                )
            elif state.get(nxt, 0) == 0:
                visit(nxt, trail + [nxt])
        state[node] = 2

    for sid in ids:
        if state.get(sid, 0) == 0:
            visit(sid, [sid])

    return report


def generation_order(graph: DependencyGraph) -> list[str]:
    """Topological order of segment ids, stable w.r.t. the stored list order.

    Parents always come before children so upstream insights exist when a
    dependent objective is generated.
    """
    report = validate_graph(graph)
    if not report.ok:
        raise InvalidGraph(report)

    position = {s.id: i for i, s in enumerate(graph.segments)}
    remaining_parents = {s.id: graph.parent_of(s.id) for s in graph.segments}
    done: set[str] = set()
    order: list[str] = []
    pending = [s.id for s in graph.segments]
    while pending:
        ready = [
            sid for sid in pending
            if remaining_parents[sid] == ROOT_ID or remaining_parents[sid] in done
        ]
        ready.sort(key=position.__getitem__)
        sid = ready[0]
        order.append(sid)
        done.add(sid)
        pending.remove(sid)
    return order


def insert_segment(
    graph: DependencyGraph,
    after: str,
    relation: LogicalRelation,
    objective: str,
) -> tuple[DependencyGraph, str]:
    """Append a user-inserted segment as a child of ``after`` (or the root).

    Returns the new graph and the allocated segment id.
    """
    if after != ROOT_ID and not graph.has_segment(after):
        raise UnknownAnchor(f"no segment with id {after!r}")
    out = graph.copy()
    new_id = str(out.next_id)
    out.next_id += 1
    out.segments.append(
        AnalysisSegment(
            id=new_id,
            objective=objective,
            source=SegmentSource.INSERTED,
            status=SegmentStatus.PENDING,
        )
    )
    out.edges.append(DependencyEdge(source=after, target=new_id, relation=relation))
    return out, new_id


def remove_segment(graph: DependencyGraph, segment_id: str) -> DependencyGraph:
    """Remove a segment; its children are re-parented to its own parent.

    Each child keeps its original relation, so downstream work survives the
    removal of an intermediate node.
    """
    if not graph.has_segment(segment_id):
        raise UnknownSegment(f"no segment with id {segment_id!r}")
    out = graph.copy()
    parent = out.parent_of(segment_id)
    new_edges: list[DependencyEdge] = []
    for edge in out.edges:
        if edge.target == segment_id:
            continue
        if edge.source == segment_id:
            new_edges.append(replace(edge, source=parent))
        else:
            new_edges.append(edge)
    out.edges = new_edges
    out.segments = [s for s in out.segments if s.id != segment_id]
    return out


def blocked_segments(graph: DependencyGraph) -> set[str]:
    """Ids whose generation is blocked by a failed ancestor.

    Children of a failed segment cannot be generated until the user removes
    or re-parents them.
    """
    failed = {s.id for s in graph.segments if s.status == SegmentStatus.FAILED}
    blocked: set[str] = set()
    for seg in graph.segments:
        node = seg.id
        seen = {node}
        while True:
            parent = graph.parent_of(node)
            if parent == ROOT_ID or parent in seen:
                break
            if parent in failed:
                blocked.add(seg.id)
                break
            seen.add(parent)
            node = parent
    return blocked - failed


def field_usage_counts(graph: DependencyGraph, field_names: list[str]) -> dict[str, int]:
    """How many live segments mention each dataset field.

    A mention is a case-insensitive exact name match on word boundaries in
    either the segment's objective or its transformation script. Failed
    segments are excluded. Lexical on purpose: deterministic and cheap;
    semantic matching belongs to the LLM stages.
    """
    patterns = {name: word_boundary_pattern(name) for name in field_names}
    counts = {name: 0 for name in field_names}
    for seg in graph.segments:
        if seg.status == SegmentStatus.FAILED:
            continue
        haystacks = [seg.objective]
        if seg.transformation is not None:
            haystacks.append(seg.transformation.script)
        for name, pattern in patterns.items():
            if any(pattern.search(text) for text in haystacks if text):
                counts[name] += 1
    return counts
