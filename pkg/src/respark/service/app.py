"""HTTP API over the pipeline: one thin, validated endpoint per operation.

Sessions are cached in memory and persisted to the store after every
mutation; mutations within a session are serialized through a per-session
lock. Progress flows through a server-sent event stream per session with
``Last-Event-ID`` replay.
"""

from __future__ import annotations

import asyncio
import base64
import json
import tempfile
import threading
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query, Request, Response
from fastapi.responses import FileResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..config import AppConfig
from ..errors import (
    CoverageError,
    DependencyOrderError,
    EmptyInput,
    InvalidGraph,
    LlmError,
    MarkupError,
    ParseError,
    ResparkError,
    SandboxUnavailable,
    TransformationFailed,
    UnknownAnchor,
    UnknownField,
    UnknownSegment,
)
from ..gateway import Transcript
from ..model import blocked_segments
from ..pipeline import Pipeline, SessionState
from ..store import Store
from . import schemas

_BAD_REQUEST = (ParseError, EmptyInput, MarkupError, UnknownField, CoverageError,
                InvalidGraph, ValueError)
_NOT_FOUND = (UnknownSegment, UnknownAnchor, KeyError)


def _graph_payload(state: SessionState) -> dict:
    payload = state.graph.to_json()
    payload["blocked"] = sorted(blocked_segments(state.graph))
    payload["failure_reasons"] = {
        sid: g.failure_reason
        for sid, g in state.generated.items()
        if g.failure_reason
    }
    return payload


def _session_payload(state: SessionState) -> dict:
    return {
        "id": state.id,
        "dataset_id": state.dataset_id,
        "report_id": state.report_id,
        "graph": _graph_payload(state),
        "generated": {sid: g.to_json() for sid, g in state.generated.items()},
        "outline": state.outline.to_json() if state.outline else None,
        "event_seq": state.event_seq,
    }


def create_app(
    config: AppConfig | None = None,
    store: Store | None = None,
    transcript: Transcript | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    config = config or AppConfig()
    store = store or Store(config.store_path)
    pipeline = Pipeline(store, config, transcript=transcript)

    app = FastAPI(title="respark", version="0.1.0")
    app.state.pipeline = pipeline
    app.state.sessions = {}
    app.state.locks = {}
    app.state.global_lock = threading.Lock()

    def session_lock(session_id: str) -> threading.Lock:
        with app.state.global_lock:
            return app.state.locks.setdefault(session_id, threading.Lock())

    def get_session(session_id: str) -> SessionState:
        state = app.state.sessions.get(session_id)
        if state is None:
            if not store.has_session(session_id):
                raise HTTPException(404, f"unknown session: {session_id}")
            state = pipeline.load(session_id)
            app.state.sessions[session_id] = state
        return state

    def llm_detail(state: SessionState | None, exc: Exception) -> dict:
        audit_ref = f"{state.id}:{len(state.audit)}" if state else "-"
        return {"error": str(exc), "audit_ref": audit_ref}

    @app.exception_handler(ResparkError)
    async def respark_error_handler(request: Request, exc: ResparkError):
        from fastapi.responses import JSONResponse

        if isinstance(exc, DependencyOrderError):
            return JSONResponse(status_code=409, content={"detail": str(exc)})
        if isinstance(exc, _NOT_FOUND):
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        if isinstance(exc, TransformationFailed):
            return JSONResponse(
                status_code=502,
                content={
                    "detail": {
                        "error": str(exc),
                        "attempt_log": [a.to_json() for a in exc.attempt_log],
                    }
                },
            )
        if isinstance(exc, LlmError):
            return JSONResponse(status_code=502, content={"detail": llm_detail(None, exc)})
        if isinstance(exc, SandboxUnavailable):
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        if isinstance(exc, _BAD_REQUEST):
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    # -- datasets ------------------------------------------------------------

    @app.post("/datasets", response_model=schemas.DatasetResponse)
    async def upload_dataset(request: Request, name: str = Query(...)):
        body = await request.body()
        if not body:
            raise HTTPException(400, "empty request body")
        dataset_id, summary = pipeline.ingest_dataset(body, name)
        return {"dataset_id": dataset_id, "summary": summary.to_json()}

    @app.get("/datasets")
    def list_datasets():
        return {
            "datasets": [
                {"dataset_id": did, "summary": store.dataset_summary(did)}
                for did in store.dataset_ids()
            ]
        }

    @app.get("/datasets/{dataset_id}", response_model=schemas.DatasetResponse)
    def get_dataset(dataset_id: str):
        if not store.has_dataset(dataset_id):
            raise HTTPException(404, f"unknown dataset: {dataset_id}")
        return {"dataset_id": dataset_id, "summary": store.dataset_summary(dataset_id)}

    # -- reports -------------------------------------------------------------

    @app.post("/reports", response_model=schemas.ReportUploadResponse)
    def upload_report(body: schemas.UploadReportRequest):
        images = {
            path: base64.b64decode(data) for path, data in body.images.items()
        }
        report_id, doc, specs, non_analytical = pipeline.add_report(
            body.markdown, images, source_uri=body.source_uri
        )
        return {
            "report_id": report_id,
            "title": doc.title,
            "segments": [s.to_json() for s in specs],
            "non_analytical": non_analytical,
        }

    @app.get("/reports")
    def list_reports(dataset: str | None = Query(default=None)):
        if dataset is None:
            return {
                "reports": [
                    {"report_id": rid, "index": store.report_index(rid)}
                    for rid in store.report_ids()
                ]
            }
        if not store.has_dataset(dataset):
            raise HTTPException(404, f"unknown dataset: {dataset}")
        ranked = pipeline.rank_for_dataset(dataset)
        out = []
        for r in ranked:
            index = store.report_index(r.report_id)
            out.append(
                {
                    "report_id": r.report_id,
                    "title": index.get("title", ""),
                    "topic_score": r.topic_score,
                    "field_score": r.field_score,
                    "total": r.total,
                    "predicted_fields": index.get("predicted_fields", []),
                }
            )
        return {"reports": out}

    @app.get("/reports/{report_id}", response_model=schemas.ReportDetailResponse)
    def get_report(report_id: str):
        if not store.has_report(report_id):
            raise HTTPException(404, f"unknown report: {report_id}")
        segments, non_analytical = store.report_segments(report_id)
        return {
            "report_id": report_id,
            "doc": store.report_doc(report_id),
            "segments": segments,
            "non_analytical": non_analytical,
            "index": store.report_index(report_id),
        }

    @app.get("/reports/{report_id}/assets/{asset_path:path}")
    def get_report_asset(report_id: str, asset_path: str):
        if not store.has_report(report_id):
            raise HTTPException(404, f"unknown report: {report_id}")
        path = store.report_asset_path(report_id, asset_path)
        if path is None:
            raise HTTPException(404, f"unknown asset: {asset_path}")
        return FileResponse(path)

    # -- sessions ---------------------------------------------------------------

    @app.post("/sessions", response_model=schemas.SessionResponse)
    def create_session(body: schemas.CreateSessionRequest):
        if not store.has_dataset(body.dataset_id):
            raise HTTPException(404, f"unknown dataset: {body.dataset_id}")
        if not store.has_report(body.report_id):
            raise HTTPException(404, f"unknown report: {body.report_id}")
        state = pipeline.create_session(body.dataset_id, body.report_id)
        app.state.sessions[state.id] = state
        return _session_payload(state)

    @app.get("/sessions/{session_id}", response_model=schemas.SessionResponse)
    def get_session_view(session_id: str):
        return _session_payload(get_session(session_id))

    @app.post(
        "/sessions/{session_id}/segments/{segment_id}/generate",
        response_model=schemas.SegmentResponse,
    )
    def generate_segment(session_id: str, segment_id: str):
        state = get_session(session_id)
        with session_lock(session_id):
            try:
                result = pipeline.generate(state, segment_id)
            except LlmError as exc:
                raise HTTPException(502, llm_detail(state, exc)) from exc
        return result.to_json()

    @app.post(
        "/sessions/{session_id}/segments/{segment_id}/regenerate",
        response_model=schemas.SegmentResponse,
    )
    def regenerate_segment(session_id: str, segment_id: str):
        state = get_session(session_id)
        with session_lock(session_id):
            try:
                result = pipeline.regenerate(state, segment_id)
            except LlmError as exc:
                raise HTTPException(502, llm_detail(state, exc)) from exc
        return result.to_json()

    @app.post("/sessions/{session_id}/segments/{segment_id}/apply")
    def apply_segment(session_id: str, segment_id: str):
        state = get_session(session_id)
        with session_lock(session_id):
            pipeline.apply(state, segment_id)
        return {"segment": segment_id, "status": "applied"}

    @app.post("/sessions/{session_id}/segments/{segment_id}/edit")
    def edit_segment(session_id: str, segment_id: str, body: schemas.EditSegmentRequest):
        edit = body.as_edit()
        if not edit:
            raise HTTPException(400, "empty edit")
        state = get_session(session_id)
        with session_lock(session_id):
            pipeline.edit(state, segment_id, edit)
        generated = state.generated.get(segment_id)
        return {
            "segment": segment_id,
            "generated": generated.to_json() if generated else None,
        }

    @app.post("/sessions/{session_id}/segments", response_model=schemas.InsertResponse)
    def insert_segment_endpoint(session_id: str, body: schemas.InsertSegmentRequest):
        state = get_session(session_id)
        with session_lock(session_id):
            try:
                new_id = pipeline.insert_segment_op(
                    state, fields=body.fields, relation=body.relation, anchor=body.anchor
                )
            except LlmError as exc:
                raise HTTPException(502, llm_detail(state, exc)) from exc
        return {
            "segment_id": new_id,
            "objective": state.graph.segment(new_id).objective,
            "graph": _graph_payload(state),
        }

    @app.delete("/sessions/{session_id}/segments/{segment_id}")
    def remove_segment_endpoint(session_id: str, segment_id: str):
        state = get_session(session_id)
        with session_lock(session_id):
            pipeline.remove(state, segment_id)
        return {"removed": segment_id, "graph": _graph_payload(state)}

    @app.get("/sessions/{session_id}/graph", response_model=schemas.GraphResponse)
    def get_graph(session_id: str):
        return _graph_payload(get_session(session_id))

    @app.get("/sessions/{session_id}/field-usage", response_model=schemas.FieldUsageResponse)
    def get_field_usage(session_id: str):
        state = get_session(session_id)
        return {"counts": pipeline.field_usage(state)}

    @app.get("/sessions/{session_id}/segments/{segment_id}/chart")
    def get_segment_chart(session_id: str, segment_id: str):
        state = get_session(session_id)
        generated = state.generated.get(segment_id)
        if generated is None or generated.record is None or not generated.record.chart:
            raise HTTPException(404, f"no chart for segment {segment_id}")
        return FileResponse(store.blob_path(generated.record.chart), media_type="image/png")

    # -- organization ------------------------------------------------------------

    @app.get("/sessions/{session_id}/outline", response_model=schemas.OutlineResponse)
    def get_outline(session_id: str):
        state = get_session(session_id)
        with session_lock(session_id):
            outline = pipeline.ensure_outline(state)
        return outline.to_json()

    @app.post("/sessions/{session_id}/outline/regroup", response_model=schemas.OutlineResponse)
    def regroup_outline(session_id: str, body: schemas.RegroupRequest):
        state = get_session(session_id)
        with session_lock(session_id):
            outline = pipeline.regroup_outline(
                state, [s.model_dump() for s in body.sections]
            )
        return outline.to_json()

    @app.post("/sessions/{session_id}/outline/titles", response_model=schemas.OutlineResponse)
    def regenerate_titles_endpoint(session_id: str, body: schemas.TitlesRequest):
        state = get_session(session_id)
        with session_lock(session_id):
            try:
                outline = pipeline.regenerate_outline_titles(state, body.scope)
            except LlmError as exc:
                raise HTTPException(502, llm_detail(state, exc)) from exc
        return outline.to_json()

    @app.post("/sessions/{session_id}/outline/title", response_model=schemas.OutlineResponse)
    def set_title_endpoint(session_id: str, body: schemas.SetTitleRequest):
        state = get_session(session_id)
        with session_lock(session_id):
            outline = pipeline.set_title(state, body.title)
        return outline.to_json()

    @app.get("/sessions/{session_id}/export", response_model=schemas.ExportResponse)
    def export_session(
        session_id: str,
        format: str = Query(default="markdown"),
        self_contained: bool = Query(default=False),
    ):
        state = get_session(session_id)
        with session_lock(session_id):
            with tempfile.TemporaryDirectory() as tmp:
                path = pipeline.export(
                    state, format, Path(tmp), self_contained=self_contained
                )
                document = path.read_text(encoding="utf-8")
                assets = {}
                assets_dir = Path(tmp) / "assets"
                if assets_dir.is_dir():
                    for asset in sorted(assets_dir.iterdir()):
                        assets[f"assets/{asset.name}"] = base64.b64encode(
                            asset.read_bytes()
                        ).decode("ascii")
        return {
            "format": format,
            "filename": path.name,
            "document": document,
            "assets": assets,
        }

    # -- events ----------------------------------------------------------------

    @app.get("/sessions/{session_id}/events")
    async def event_stream(
        session_id: str,
        request: Request,
        after: int = Query(default=0),
        idle_timeout: float | None = Query(default=None),
        last_event_id: str | None = Header(default=None, alias="Last-Event-ID"),
    ):
        """Server-sent events, replayed from ``Last-Event-ID`` (or ``after``).

        Without ``idle_timeout`` the stream stays open indefinitely; with it,
        the stream closes after that many quiet seconds (useful for polling
        clients and tests).
        """
        state = get_session(session_id)
        cursor = int(last_event_id) if last_event_id else after

        async def stream():
            position = cursor
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                pending = [e for e in state.events if e["seq"] > position]
                for event in pending:
                    position = event["seq"]
                    yield (
                        f"id: {event['seq']}\n"
                        f"data: {json.dumps(event, separators=(',', ':'))}\n\n"
                    )
                if pending:
                    idle = 0.0
                elif idle_timeout is not None:
                    if idle >= idle_timeout:
                        return
                    idle += 0.05
                await asyncio.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/events/log")
    def event_log(session_id: str, after: int = Query(default=0)):
        """Polling fallback for clients that cannot hold an SSE connection."""
        state = get_session(session_id)
        return {"events": [e for e in state.events if e["seq"] > after]}

    @app.get("/healthz")
    def health():
        return {"status": "ok"}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
