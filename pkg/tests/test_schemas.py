"""Contract test: live service payloads validate against docs/schemas."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest

ROOT = Path(__file__).resolve().parents[1]
SCHEMAS = ROOT / "docs" / "schemas"


def load(name: str) -> dict:
    return json.loads((SCHEMAS / name).read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def walkthrough_payloads(tmp_path_factory):
    from fastapi.testclient import TestClient

    from test_service import drive_walkthrough, make_app

    app = make_app(tmp_path_factory.mktemp("store"))
    with TestClient(app) as client:
        session_id, export = drive_walkthrough(client)
        graph = client.get(f"/sessions/{session_id}/graph").json()
        outline = client.get(f"/sessions/{session_id}/outline").json()
        events = client.get(f"/sessions/{session_id}/events/log").json()["events"]
        session = client.get(f"/sessions/{session_id}").json()
        dataset_id = session["dataset_id"]
        summary = client.get(f"/datasets/{dataset_id}").json()["summary"]
        ranked = client.get("/reports", params={"dataset": dataset_id}).json()["reports"]
        report = client.get(f"/reports/{session['report_id']}").json()
    return {
        "graph": graph,
        "outline": outline,
        "events": events,
        "generated": session["generated"],
        "summary": summary,
        "ranked": ranked,
        "report_doc": report["doc"],
        "segment_specs": report["segments"],
    }


def test_graph_schema(walkthrough_payloads):
    jsonschema.validate(walkthrough_payloads["graph"], load("graph.schema.json"))


def test_outline_schema(walkthrough_payloads):
    jsonschema.validate(walkthrough_payloads["outline"], load("outline.schema.json"))


def test_event_schema(walkthrough_payloads):
    schema = load("event.schema.json")
    assert walkthrough_payloads["events"]
    for event in walkthrough_payloads["events"]:
        jsonschema.validate(event, schema)


def test_generated_segment_schema(walkthrough_payloads):
    schema = load("generated-segment.schema.json")
    assert walkthrough_payloads["generated"]
    for segment in walkthrough_payloads["generated"].values():
        jsonschema.validate(segment, schema)


def test_data_summary_schema(walkthrough_payloads):
    jsonschema.validate(walkthrough_payloads["summary"], load("data-summary.schema.json"))


def test_ranked_report_schema(walkthrough_payloads):
    schema = load("ranked-report.schema.json")
    for row in walkthrough_payloads["ranked"]:
        jsonschema.validate(row, schema)


def test_report_doc_schema(walkthrough_payloads):
    jsonschema.validate(walkthrough_payloads["report_doc"], load("report-doc.schema.json"))


def test_segment_spec_schema(walkthrough_payloads):
    schema = load("segment-spec.schema.json")
    for spec in walkthrough_payloads["segment_specs"]:
        jsonschema.validate(spec, schema)


def test_transcript_and_gold_fixtures_validate():
    transcript_schema = load("transcript.schema.json")
    for path in (ROOT / "fixtures" / "transcripts").glob("*.json"):
        jsonschema.validate(json.loads(path.read_text(encoding="utf-8")),
                            transcript_schema)
    gold_schema = load("gold-annotation.schema.json")
    for path in (ROOT / "fixtures" / "seg_corpus" / "gold").glob("*.json"):
        jsonschema.validate(json.loads(path.read_text(encoding="utf-8")), gold_schema)
