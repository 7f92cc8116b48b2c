"""Organization stage: inherit the reference structure and export the report.

The outline mirrors the reference report's section groupings by default;
inserted segments slot in right after their parent, titles can be
regenerated per section or for the whole report, and the result exports to
markdown (the same canonical markup the importer reads back) or HTML.
"""

from __future__ import annotations

import base64
import html
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .adapt import GeneratedSegment
from .errors import CoverageError, IoError
from .gateway import GatewaySession
from .model import ROOT_ID, DependencyGraph, SegmentSource, SegmentStatus
from .report import Block, BlockKind, ReportDoc, render_markdown_report

HIGHLIGHT_OPEN = "<mark>"
HIGHLIGHT_CLOSE = "</mark>"
HIGHLIGHT_CLASS = "highlight-nonanalytical"


@dataclass
class Section:
    heading: str
    segment_ids: list[str] = field(default_factory=list)
    callouts: list[str] = field(default_factory=list)   # reference-context texts

    def to_json(self) -> dict:
        return {
            "heading": self.heading,
            "segment_ids": list(self.segment_ids),
            "callouts": list(self.callouts),
        }

    @classmethod
    def from_json(cls, data: dict) -> Section:
        return cls(
            heading=data.get("heading", ""),
            segment_ids=list(data.get("segment_ids", [])),
            callouts=list(data.get("callouts", [])),
        )


@dataclass
class ReportOutline:
    title: str
    sections: list[Section] = field(default_factory=list)
    orphans: list[str] = field(default_factory=list)
    preamble_callouts: list[str] = field(default_factory=list)

    def live_segment_ids(self) -> list[str]:
        ids: list[str] = []
        for section in self.sections:
            ids.extend(section.segment_ids)
        ids.extend(self.orphans)
        return ids

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "sections": [s.to_json() for s in self.sections],
            "orphans": list(self.orphans),
            "preamble_callouts": list(self.preamble_callouts),
        }

    @classmethod
    def from_json(cls, data: dict) -> ReportOutline:
        return cls(
            title=data.get("title", ""),
            sections=[Section.from_json(s) for s in data.get("sections", [])],
            orphans=list(data.get("orphans", [])),
            preamble_callouts=list(data.get("preamble_callouts", [])),
        )


def inherit_structure(
    reference: ReportDoc,
    graph: DependencyGraph,
    non_analytical: list[int] | None = None,
) -> ReportOutline:
    """Mirror the reference's heading layout and place each segment where
    its source blocks lived.

    Failed segments are omitted; inserted segments are placed after their
    parent. Non-analytical reference blocks are kept as callout texts at
    their original section positions rather than dropped.
    """
    na_ids = set(non_analytical or [])
    sections: list[Section] = []
    preamble_callouts: list[str] = []
    block_section: dict[int, int] = {}   # block id -> section index (-1 = preamble)
    current = -1
    for block in reference.blocks:
        if block.kind == BlockKind.HEADING:
            sections.append(Section(heading=block.text))
            current = len(sections) - 1
        else:
            block_section[block.id] = current
            if block.id in na_ids and block.kind == BlockKind.PARAGRAPH:
                if current < 0:
                    preamble_callouts.append(block.text)
                else:
                    sections[current].callouts.append(block.text)

    if not sections:
        sections = [Section(heading="")]

    outline = ReportOutline(
        title=reference.title,
        sections=sections,
        preamble_callouts=preamble_callouts,
    )
    inserted: list[str] = []
    for segment in graph.segments:
        if segment.status == SegmentStatus.FAILED:
            continue
        if segment.source == SegmentSource.INSERTED or not segment.reference_blocks:
            inserted.append(segment.id)
            continue
        index = block_section.get(segment.reference_blocks[0], -1)
        if index < 0:
            index = 0
        outline.sections[index].segment_ids.append(segment.id)
    for segment_id in inserted:
        outline = place_inserted(outline, segment_id, graph)
    return outline


def place_inserted(
    outline: ReportOutline,
    segment_id: str,
    graph: DependencyGraph,
) -> ReportOutline:
    """Place an inserted segment immediately after its parent.

    Later inserts under the same parent land after earlier ones, preserving
    insertion order. Root-parented inserts append to the final section.
    """
    parent = graph.parent_of(segment_id)
    out = ReportOutline.from_json(outline.to_json())
    if segment_id in out.live_segment_ids():
        return out
    if parent != ROOT_ID:
        for section in out.sections:
            if parent in section.segment_ids:
                pos = section.segment_ids.index(parent) + 1
                # Skip past earlier inserts under the same parent.
                while (
                    pos < len(section.segment_ids)
                    and graph.has_segment(section.segment_ids[pos])
                    and graph.segment(section.segment_ids[pos]).source == SegmentSource.INSERTED
                    and graph.parent_of(section.segment_ids[pos]) == parent
                ):
                    pos += 1
                section.segment_ids.insert(pos, segment_id)
                return out
    if not out.sections:
        out.sections = [Section(heading="")]
    out.sections[-1].segment_ids.append(segment_id)
    return out


def _outline_content(
    outline: ReportOutline,
    segments: dict[str, GeneratedSegment],
    ids: list[str],
) -> str:
    lines = []
    for sid in ids:
        seg = segments.get(sid)
        if seg is None:
            continue
        lines.append(f"- {seg.adapted_objective}: {seg.narrative}")
    return "\n".join(lines) or "(no content)"


def regenerate_titles(
    outline: ReportOutline,
    segments: dict[str, GeneratedSegment],
    session: GatewaySession,
    scope: str = "report",
) -> ReportOutline:
    """Regenerate the report title (scope="report") or one section heading
    (scope=section index as a string). Nothing else is touched."""
    out = ReportOutline.from_json(outline.to_json())
    if scope == "report":
        payload = session.complete_structured(
            "organize.title",
            {"content": _outline_content(outline, segments, outline.live_segment_ids())},
        )
        out.title = payload["title"]
        return out
    index = int(scope)
    if not (0 <= index < len(out.sections)):
        raise CoverageError(f"no section with index {index}")
    payload = session.complete_structured(
        "organize.heading",
        {"content": _outline_content(outline, segments, out.sections[index].segment_ids)},
    )
    out.sections[index].heading = payload["heading"]
    return out


def regroup(outline: ReportOutline, assignment: list[dict]) -> ReportOutline:
    """Replace the section layout with an explicit assignment.

    ``assignment`` is ``[{"heading": str, "segment_ids": [str]}]`` and must
    cover every live segment exactly once.
    """
    live = outline.live_segment_ids()
    assigned: list[str] = []
    for section in assignment:
        assigned.extend(section.get("segment_ids", []))
    missing = [sid for sid in live if sid not in assigned]
    unknown = [sid for sid in assigned if sid not in live]
    duplicated = sorted({sid for sid in assigned if assigned.count(sid) > 1})
    if missing or unknown or duplicated:
        problems = []
        if missing:
            problems.append(f"missing: {', '.join(missing)}")
        if unknown:
            problems.append(f"unknown: {', '.join(unknown)}")
        if duplicated:
            problems.append(f"duplicated: {', '.join(duplicated)}")
        raise CoverageError("; ".join(problems))
    out = ReportOutline(
        title=outline.title,
        sections=[
            Section(heading=s.get("heading", ""), segment_ids=list(s["segment_ids"]))
            for s in assignment
        ],
        orphans=[],
        preamble_callouts=list(outline.preamble_callouts)
        + [c for section in outline.sections for c in section.callouts],
    )
    return out


# --- export -----------------------------------------------------------------

def _with_highlights(text: str, spans: list[tuple[int, int]]) -> str:
    out = text
    for start, end in sorted(spans, reverse=True):
        out = out[:start] + HIGHLIGHT_OPEN + out[start:end] + HIGHLIGHT_CLOSE + out[end:]
    return out


def outline_to_doc(
    outline: ReportOutline,
    segments: dict[str, GeneratedSegment],
    asset_names: dict[str, str],
) -> ReportDoc:
    """Flatten the outline into a canonical block sequence."""
    blocks: list[Block] = []

    def add(kind: BlockKind, **kwargs) -> None:
        blocks.append(Block(id=len(blocks), kind=kind, **kwargs))

    for text in outline.preamble_callouts:
        add(BlockKind.PARAGRAPH, text=text, callout=True)
    for section in outline.sections:
        if section.heading:
            add(BlockKind.HEADING, text=section.heading, level=2)
        for text in section.callouts:
            add(BlockKind.PARAGRAPH, text=text, callout=True)
        for sid in section.segment_ids:
            seg = segments.get(sid)
            if seg is None:
                continue
            narrative = _with_highlights(seg.narrative, seg.non_analytical_spans)
            if narrative:
                add(BlockKind.PARAGRAPH, text=narrative)
            if sid in asset_names:
                add(BlockKind.CHART, image=asset_names[sid])
    for sid in outline.orphans:
        seg = segments.get(sid)
        if seg is None:
            continue
        narrative = _with_highlights(seg.narrative, seg.non_analytical_spans)
        if narrative:
            add(BlockKind.PARAGRAPH, text=narrative)
        if sid in asset_names:
            add(BlockKind.CHART, image=asset_names[sid])
    return ReportDoc(title=outline.title, blocks=blocks)


_HTML_TEMPLATE = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
body {{ font-family: system-ui, sans-serif; max-width: 46rem; margin: 2rem auto; padding: 0 1rem; }}
img {{ max-width: 100%; }}
blockquote {{ color: #555; border-left: 3px solid #bbb; margin-left: 0; padding-left: 1rem; }}
.{highlight_class} {{ background: #ffe9a8; }}
</style>
</head>
<body>
{body}
</body>
</html>
"""


def _narrative_html(text: str, spans: list[tuple[int, int]]) -> str:
    open_sentinel = "\x00O\x00"
    close_sentinel = "\x00C\x00"
    marked = text
    for start, end in sorted(spans, reverse=True):
        marked = (
            marked[:start] + open_sentinel + marked[start:end] + close_sentinel + marked[end:]
        )
    escaped = html.escape(marked)
    escaped = escaped.replace(open_sentinel, f'<mark class="{HIGHLIGHT_CLASS}">')
    escaped = escaped.replace(close_sentinel, "</mark>")
    return escaped


def render_html_report(
    outline: ReportOutline,
    segments: dict[str, GeneratedSegment],
    asset_names: dict[str, str],
    asset_bytes: dict[str, bytes] | None = None,
) -> str:
    """Minimal fixed-template HTML; ``asset_bytes`` inlines images."""
    parts: list[str] = [f"<h1>{html.escape(outline.title)}</h1>"]

    def image_src(name: str) -> str:
        if asset_bytes is not None and name in asset_bytes:
            payload = base64.b64encode(asset_bytes[name]).decode("ascii")
            return f"data:image/png;base64,{payload}"
        return name

    def emit_segment(sid: str) -> None:
        seg = segments.get(sid)
        if seg is None:
            return
        if seg.narrative:
            parts.append(f"<p>{_narrative_html(seg.narrative, seg.non_analytical_spans)}</p>")
        if sid in asset_names:
            parts.append(f'<img src="{image_src(asset_names[sid])}" alt="chart">')

    for text in outline.preamble_callouts:
        parts.append(f"<blockquote>{html.escape(text)}</blockquote>")
    for section in outline.sections:
        if section.heading:
            parts.append(f"<h2>{html.escape(section.heading)}</h2>")
        for text in section.callouts:
            parts.append(f"<blockquote>{html.escape(text)}</blockquote>")
        for sid in section.segment_ids:
            emit_segment(sid)
    for sid in outline.orphans:
        emit_segment(sid)
    return _HTML_TEMPLATE.format(
        title=html.escape(outline.title),
        highlight_class=HIGHLIGHT_CLASS,
        body="\n".join(parts),
    )


def export_report(
    outline: ReportOutline,
    segments: dict[str, GeneratedSegment],
    fmt: str,
    out_dir: Path,
    self_contained: bool = False,
) -> Path:
    """Write the report document plus its asset directory.

    Charts are copied to ``assets/<segment id>.png``; output bytes are a
    pure function of outline, segments and assets.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        assets_dir = out_dir / "assets"
        asset_names: dict[str, str] = {}
        asset_bytes: dict[str, bytes] = {}
        for sid in outline.live_segment_ids():
            seg = segments.get(sid)
            if seg is None or seg.record is None or not seg.record.chart:
                continue
            source = Path(seg.record.chart)
            if not source.is_file():
                continue
            name = f"assets/{sid}.png"
            assets_dir.mkdir(exist_ok=True)
            shutil.copyfile(source, out_dir / name)
            asset_names[sid] = name
            asset_bytes[name] = (out_dir / name).read_bytes()

        if fmt == "markdown":
            doc = outline_to_doc(outline, segments, asset_names)
            path = out_dir / "report.md"
            path.write_text(render_markdown_report(doc), encoding="utf-8")
        elif fmt == "html":
            path = out_dir / "report.html"
            path.write_text(
                render_html_report(
                    outline,
                    segments,
                    asset_names,
                    asset_bytes if self_contained else None,
                ),
                encoding="utf-8",
            )
        else:
            raise ValueError(f"unknown export format: {fmt!r}")
    except OSError as exc:
        raise IoError(f"export failed: {exc}") from exc
    return path
