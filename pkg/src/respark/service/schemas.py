"""Pydantic request/response models for the HTTP API.

These mirror the canonical JSON contracts under ``docs/schemas/``; the UI
builds against the same shapes.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


# -- requests -----------------------------------------------------------------

class UploadReportRequest(BaseModel):
    markdown: str
    images: dict[str, str] = Field(default_factory=dict)  # path -> base64
    source_uri: str = ""


class CreateSessionRequest(BaseModel):
    dataset_id: str
    report_id: str


class InsertSegmentRequest(BaseModel):
    fields: list[str]
    relation: str
    anchor: str = "root"


class EditSegmentRequest(BaseModel):
    objective: Optional[str] = None
    script: Optional[str] = None
    narrative: Optional[str] = None

    def as_edit(self) -> dict:
        edit: dict = {}
        if self.objective is not None:
            edit["objective"] = self.objective
        if self.script is not None:
            edit["script"] = self.script
        if self.narrative is not None:
            edit["narrative"] = self.narrative
        return edit


class SectionAssignment(BaseModel):
    heading: str = ""
    segment_ids: list[str]


class RegroupRequest(BaseModel):
    sections: list[SectionAssignment]


class TitlesRequest(BaseModel):
    scope: str = "report"


class SetTitleRequest(BaseModel):
    title: str


# -- responses ----------------------------------------------------------------

class FieldProfileModel(BaseModel):
    name: str
    inferred_type: str
    unique_count: int
    null_count: int
    range: Optional[list[str]] = None
    samples: list[str] = Field(default_factory=list)
    description: str = ""


class DataSummaryModel(BaseModel):
    dataset_name: str
    dataset_description: str
    fields: list[FieldProfileModel]
    row_count: int


class DatasetResponse(BaseModel):
    dataset_id: str
    summary: DataSummaryModel


class RankedReportModel(BaseModel):
    report_id: str
    title: str
    topic_score: float
    field_score: float
    total: float
    predicted_fields: list[list[str]] = Field(default_factory=list)


class ReportUploadResponse(BaseModel):
    report_id: str
    title: str
    segments: list[dict]
    non_analytical: list[int]


class ReportDetailResponse(BaseModel):
    report_id: str
    doc: dict
    segments: list[dict]
    non_analytical: list[int]
    index: dict


class GraphResponse(BaseModel):
    root: str
    segments: list[dict]
    edges: list[dict]
    next_id: int
    blocked: list[str]
    failure_reasons: dict[str, str]


class SegmentResponse(BaseModel):
    segment_id: str
    adapted_objective: str
    record: Optional[dict] = None
    narrative: str = ""
    non_analytical_spans: list[list[int]] = Field(default_factory=list)
    status: str
    failure_reason: Optional[str] = None


class SessionResponse(BaseModel):
    id: str
    dataset_id: str
    report_id: str
    graph: GraphResponse
    generated: dict[str, SegmentResponse]
    outline: Optional[dict] = None
    event_seq: int


class InsertResponse(BaseModel):
    segment_id: str
    objective: str
    graph: GraphResponse


class FieldUsageResponse(BaseModel):
    counts: dict[str, int]


class OutlineResponse(BaseModel):
    title: str
    sections: list[dict]
    orphans: list[str]
    preamble_callouts: list[str]


class ExportResponse(BaseModel):
    format: str
    filename: str
    document: str
    assets: dict[str, str] = Field(default_factory=dict)  # name -> base64


class EventModel(BaseModel):
    seq: int
    kind: str
    payload: dict[str, Any]
