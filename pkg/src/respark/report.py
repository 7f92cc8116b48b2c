"""Reference reports as block sequences and their segmentation.

A report is an ordered list of blocks (headings, paragraphs, charts). The
segmenter groups blocks into analysis segments in three LLM-assisted steps:
match paragraphs to their nearest chart, categorize the unmatched ones as
analytical or background, and summarize each group's objective plus its
dependency on an earlier segment. Boundary-level precision/recall/F1
against gold annotations lives here too.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import MalformedLlmOutput, MarkupError
from .gateway import GatewaySession
from .model import LogicalRelation, parse_relation


class BlockKind(Enum):
    HEADING = "heading"
    PARAGRAPH = "paragraph"
    CHART = "chart"


@dataclass
class Block:
    id: int
    kind: BlockKind
    text: str = ""                 # empty for charts
    image: str | None = None       # chart blocks only, relative path
    level: int | None = None       # heading blocks only
    callout: bool = False          # paragraph rendered as a quoted callout

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "text": self.text,
            "image": self.image,
            "level": self.level,
            "callout": self.callout,
        }

    @classmethod
    def from_json(cls, data: dict) -> Block:
        return cls(
            id=data["id"],
            kind=BlockKind(data["kind"]),
            text=data.get("text", ""),
            image=data.get("image"),
            level=data.get("level"),
            callout=data.get("callout", False),
        )


@dataclass
class ReportDoc:
    title: str
    blocks: list[Block]
    source_uri: str = ""

    def paragraphs(self) -> list[Block]:
        return [b for b in self.blocks if b.kind == BlockKind.PARAGRAPH]

    def charts(self) -> list[Block]:
        return [b for b in self.blocks if b.kind == BlockKind.CHART]

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "blocks": [b.to_json() for b in self.blocks],
            "source_uri": self.source_uri,
        }

    @classmethod
    def from_json(cls, data: dict) -> ReportDoc:
        return cls(
            title=data["title"],
            blocks=[Block.from_json(b) for b in data.get("blocks", [])],
            source_uri=data.get("source_uri", ""),
        )


@dataclass
class SegmentSpec:
    """One deduced analysis segment of the reference report."""

    block_ids: list[int]
    objective: str
    depends_on: int | None          # index of an earlier spec, None = dataset
    relation: LogicalRelation
    analytical: bool = True

    def to_json(self) -> dict:
        return {
            "block_ids": list(self.block_ids),
            "objective": self.objective,
            "depends_on": self.depends_on,
            "relation": self.relation.value,
            "analytical": self.analytical,
        }

    @classmethod
    def from_json(cls, data: dict) -> SegmentSpec:
        return cls(
            block_ids=list(data["block_ids"]),
            objective=data["objective"],
            depends_on=data.get("depends_on"),
            relation=parse_relation(data["relation"]),
            analytical=data.get("analytical", True),
        )


@dataclass
class SegEvalResult:
    precision: float
    recall: float
    f1: float
    true_positive: int
    false_positive: int
    false_negative: int

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "true_positive": self.true_positive,
            "false_positive": self.false_positive,
            "false_negative": self.false_negative,
        }


# --- canonical markup -------------------------------------------------------

_IMAGE_LINE = re.compile(r"^!\[([^\]]*)\]\(([^)]+)\)\s*$")
_HEADING_LINE = re.compile(r"^(#{1,6})\s+(.*)$")


def parse_markdown_report(
    text: str,
    source_uri: str = "",
    assets_base: Path | None = None,
) -> ReportDoc:
    """Convert the Markdown-with-images subset into a canonical block list.

    The first level-1 heading becomes the document title; later headings
    become heading blocks, standalone image lines become chart blocks, and
    ``> `` lines become callout paragraphs. With ``assets_base`` given,
    image references must resolve beneath it.
    """
    title = ""
    blocks: list[Block] = []
    pending: list[str] = []
    pending_callout = False

    def flush() -> None:
        nonlocal pending, pending_callout
        if pending:
            blocks.append(
                Block(
                    id=len(blocks),
                    kind=BlockKind.PARAGRAPH,
                    text=" ".join(pending),
                    callout=pending_callout,
                )
            )
        pending = []
        pending_callout = False

    for raw_line in text.splitlines():
        line = raw_line.rstrip()
        if not line.strip():
            flush()
            continue
        heading = _HEADING_LINE.match(line)
        if heading:
            flush()
            level = len(heading.group(1))
            if level == 1 and not title and not blocks:
                title = heading.group(2).strip()
                continue
            blocks.append(
                Block(
                    id=len(blocks),
                    kind=BlockKind.HEADING,
                    text=heading.group(2).strip(),
                    level=level,
                )
            )
            continue
        image = _IMAGE_LINE.match(line)
        if image:
            flush()
            path = image.group(2).strip()
            if assets_base is not None and not (assets_base / path).is_file():
                raise MarkupError(f"dangling image reference: {path}")
            blocks.append(Block(id=len(blocks), kind=BlockKind.CHART, image=path))
            continue
        if line.startswith("> "):
            if pending and not pending_callout:
                flush()
            pending_callout = True
            pending.append(line[2:])
            continue
        if pending_callout:
            flush()
        pending.append(line)
    flush()
    return ReportDoc(title=title, blocks=blocks, source_uri=source_uri)


def render_markdown_report(doc: ReportDoc) -> str:
    """Inverse of :func:`parse_markdown_report` for canonical documents."""
    lines: list[str] = [f"# {doc.title}", ""]
    for block in doc.blocks:
        if block.kind == BlockKind.HEADING:
            level = block.level or 2
            lines.append("#" * level + f" {block.text}")
        elif block.kind == BlockKind.CHART:
            lines.append(f"![chart]({block.image})")
        else:
            lines.append(("> " if block.callout else "") + block.text)
        lines.append("")
    while len(lines) > 1 and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"


def parse_report(
    text: str,
    source_uri: str = "",
    assets_base: Path | None = None,
) -> ReportDoc:
    """Load a report from canonical JSON or the markdown subset."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = ReportDoc.from_json(json.loads(text))
        for i, block in enumerate(doc.blocks):
            if block.id != i:
                raise MarkupError(f"block ids must be dense 0..n-1, got {block.id} at {i}")
            if block.kind == BlockKind.CHART:
                if not block.image:
                    raise MarkupError(f"chart block {i} has no image reference")
                if assets_base is not None and not (assets_base / block.image).is_file():
                    raise MarkupError(f"dangling image reference: {block.image}")
        if not doc.source_uri:
            doc.source_uri = source_uri
        return doc
    return parse_markdown_report(text, source_uri=source_uri, assets_base=assets_base)


# --- segmentation -----------------------------------------------------------

def _is_yes(reply: str) -> bool:
    return reply.strip().lower().startswith("yes")


def match_paragraphs(doc: ReportDoc, session: GatewaySession) -> dict[int, int | None]:
    """Assign each paragraph to its nearest preceding or following chart.

    Candidates are ordered by block distance with the preceding chart asked
    first on ties; the paragraph binds to the first chart the model accepts.
    A second pass enforces that each chart's text forms one continuous run:
    acceptances that would break contiguity are dropped.
    """
    chart_ids = [b.id for b in doc.charts()]
    provisional: dict[int, int | None] = {}
    for para in doc.paragraphs():
        preceding = max((c for c in chart_ids if c < para.id), default=None)
        following = min((c for c in chart_ids if c > para.id), default=None)
        candidates: list[int] = []
        for chart_id in (preceding, following):
            if chart_id is not None:
                candidates.append(chart_id)
        candidates.sort(key=lambda c: (abs(c - para.id), c > para.id))
        provisional[para.id] = None
        for chart_id in candidates:
            chart = doc.blocks[chart_id]
            reply = session.complete(
                "segment.match",
                {
                    "chart_ref": f"chart #{chart_id} ({chart.image})",
                    "paragraph": para.text,
                },
            )
            if _is_yes(reply):
                provisional[para.id] = chart_id
                break

    assignment: dict[int, int | None] = {pid: None for pid in provisional}
    kinds = {b.id: b.kind for b in doc.blocks}
    for chart_id in chart_ids:
        for step in (-1, 1):
            pos = chart_id + step
            while (
                kinds.get(pos) == BlockKind.PARAGRAPH
                and provisional.get(pos) == chart_id
            ):
                assignment[pos] = chart_id
                pos += step
    return assignment


def categorize_blocks(
    doc: ReportDoc,
    unmatched: list[int],
    session: GatewaySession,
) -> tuple[list[list[int]], list[int]]:
    """Label unmatched paragraphs and group adjacent analytical ones.

    Returns (groups of block ids, non-analytical block ids). Adjacent means
    consecutive block ids; a merge additionally requires the model to judge
    both paragraphs as reading off the same transformed data.
    """
    labels: dict[int, bool] = {}
    for pid in sorted(unmatched):
        reply = session.complete(
            "segment.categorize", {"paragraph": doc.blocks[pid].text}
        )
        labels[pid] = "non" not in reply.strip().lower()

    non_analytical = [pid for pid in sorted(unmatched) if not labels[pid]]
    groups: list[list[int]] = []
    for pid in sorted(unmatched):
        if not labels[pid]:
            continue
        if groups and pid == groups[-1][-1] + 1:
            reply = session.complete(
                "segment.group",
                {
                    "first": doc.blocks[groups[-1][-1]].text,
                    "second": doc.blocks[pid].text,
                },
            )
            if _is_yes(reply):
                groups[-1].append(pid)
                continue
        groups.append([pid])
    return groups, non_analytical


def _group_content(doc: ReportDoc, block_ids: list[int]) -> str:
    parts: list[str] = []
    for bid in block_ids:
        block = doc.blocks[bid]
        if block.kind == BlockKind.CHART:
            parts.append(f"[chart: {block.image}]")
        else:
            parts.append(block.text)
    return "\n".join(parts)


def summarize_segments(
    groups: list[list[int]],
    doc: ReportDoc,
    session: GatewaySession,
) -> list[SegmentSpec]:
    """Extract each group's objective and its dependency on earlier segments."""
    specs: list[SegmentSpec] = []
    for block_ids in groups:
        previous = "\n".join(
            f"{i + 1}. {spec.objective}" for i, spec in enumerate(specs)
        ) or "(none)"

        def check(payload: dict, n_prev: int = len(specs)) -> None:
            dep = payload["depends_on"]
            if dep is not None and not (1 <= dep <= n_prev):
                raise MalformedLlmOutput(
                    f"depends_on must be null or in 1..{n_prev}, got {dep}"
                )
            try:
                parse_relation(payload["relation"])
            except ValueError as exc:
                raise MalformedLlmOutput(str(exc)) from exc

        payload = session.complete_structured(
            "segment.summarize",
            {"previous": previous, "content": _group_content(doc, block_ids)},
            check=check,
        )
        depends_on = payload["depends_on"]
        specs.append(
            SegmentSpec(
                block_ids=sorted(block_ids),
                objective=payload["objective"],
                depends_on=None if depends_on is None else depends_on - 1,
                relation=parse_relation(payload["relation"]),
            )
        )
    return specs


def segment_report(
    doc: ReportDoc,
    session: GatewaySession,
) -> tuple[list[SegmentSpec], list[int]]:
    """Full three-step segmentation: match, categorize, summarize."""
    assignment = match_paragraphs(doc, session)
    # Every chart anchors a group, even when no paragraph describes it.
    matched_groups: dict[int, list[int]] = {b.id: [] for b in doc.charts()}
    for pid, chart_id in assignment.items():
        if chart_id is not None:
            matched_groups[chart_id].append(pid)
    unmatched = [pid for pid, chart_id in assignment.items() if chart_id is None]

    text_groups, non_analytical = categorize_blocks(doc, sorted(unmatched), session)

    groups: list[list[int]] = [
        sorted(pids + [chart_id]) for chart_id, pids in matched_groups.items()
    ]
    groups.extend(text_groups)
    groups.sort(key=lambda ids: ids[0])

    specs = summarize_segments(groups, doc, session)
    return specs, sorted(non_analytical)


# --- evaluation -------------------------------------------------------------

def predicted_boundaries(specs: list[SegmentSpec]) -> set[int]:
    """Boundary set of a segmentation: the first block id of every segment.

    Boundaries are between-block cut indices; a boundary at ``i`` separates
    block ``i-1`` from block ``i``. The cut at document start is not counted.
    """
    return {min(spec.block_ids) for spec in specs if spec.block_ids} - {0}


def eval_segmentation(predicted: set[int], gold: set[int]) -> SegEvalResult:
    tp = len(predicted & gold)
    fp = len(predicted - gold)
    fn = len(gold - predicted)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return SegEvalResult(
        precision=precision,
        recall=recall,
        f1=f1,
        true_positive=tp,
        false_positive=fp,
        false_negative=fn,
    )
