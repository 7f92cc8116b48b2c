"""Pipeline layer: session lifecycle, ordering rules, edits, outline flow."""

from __future__ import annotations

import json

import pytest

from respark.config import AppConfig
from respark.errors import DependencyOrderError, MissingTranscript
from respark.gateway import Transcript
from respark.model import ROOT_ID, SegmentStatus
from respark.pipeline import Pipeline
from respark.store import Store

TINY_PNG_HEX = (
    "89504e470d0a1a0a0000000d4948445200000001000000010802000000907753de"
    "0000000c4944415478da63f8cfc000000301010018dd8db00000000049454e44ae426082"
)

GOOD_SCRIPT = (
    "import os, shutil\n"
    "shutil.copyfile(os.environ['RESPARK_DATA'], 'out/table.csv')\n"
    f"open('out/chart.png', 'wb').write(bytes.fromhex('{TINY_PNG_HEX}'))\n"
)


def fence(code: str) -> str:
    return f"```python\n{code}\n```"


def jfence(payload: dict) -> str:
    return "```json\n" + json.dumps(payload) + "\n```"


ONE_SEGMENT_REPORT = "# Tiny report\n\nThe only analytical paragraph.\n"

NONE_CORRECTION = jfence({
    "result": "none",
    "reason": "needs a field the dataset lacks",
    "dimensions": {"data_fields": "missing", "insight_dependency": "n/a",
                   "data_scope": "n/a"},
})


def tiny_transcript(corrections: list[str]) -> Transcript:
    return Transcript(completions={
        "ingest.summarize": [jfence({
            "dataset_description": "two demo columns",
            "fields": [{"name": "a", "description": "first"},
                       {"name": "b", "description": "second"}],
        })],
        "segment.categorize": ["analytical"],
        "segment.summarize": [jfence({
            "objective": "What does column a look like?",
            "depends_on": None, "relation": "elaboration",
        })],
        "rank.infer_fields": [jfence({"fields": [{"name": "a", "description": "col"}]})],
        "adapt.correct_objective": corrections,
        "adapt.codegen": [fence(GOOD_SCRIPT)],
        "adapt.insight": ["Column a holds small numbers."],
        "adapt.flag_nonanalytical": [jfence({"non_analytical_sentences": []})],
        "adapt.insert_objective": [jfence({"objective": "Inspect column b."})],
        "organize.title": [jfence({"title": "Fresh title"})],
    })


@pytest.fixture
def pipeline(tmp_path):
    config = AppConfig()
    config.store_path = str(tmp_path / "store")
    config.sandbox.timeout_s = 30.0
    return Pipeline(Store(tmp_path / "store"), config,
                    transcript=tiny_transcript([NONE_CORRECTION]))


def seeded_session(pipeline):
    dataset_id, _ = pipeline.ingest_dataset(b"a,b\n1,2\n3,4\n", "demo")
    report_id, _, _, _ = pipeline.add_report(ONE_SEGMENT_REPORT)
    return pipeline.create_session(dataset_id, report_id)


class TestSessionLifecycle:
    def test_reference_segments_loaded_pending(self, pipeline):
        state = seeded_session(pipeline)
        assert [s.id for s in state.graph.segments] == ["1"]
        assert state.graph.segments[0].status == SegmentStatus.PENDING
        assert state.graph.segments[0].reference_blocks == [0]
        assert state.graph.parent_of("1") == ROOT_ID

    def test_failed_then_edit_then_regenerate_skips_correction(self, pipeline):
        # The transcript scripts exactly ONE correction reply ("none"). The
        # regeneration after a user edit must not consume a second one, or
        # the mock raises MissingTranscript -- so success here proves the
        # correction step was skipped and the pipeline restarted at the
        # transformation with the edited text.
        state = seeded_session(pipeline)
        result = pipeline.generate(state, "1")
        assert result.status == SegmentStatus.FAILED
        assert state.graph.segment("1").status == SegmentStatus.FAILED

        pipeline.edit(state, "1", {"objective": "Count the rows of column a."})
        regenerated = pipeline.regenerate(state, "1")
        assert regenerated.status == SegmentStatus.GENERATED
        assert regenerated.adapted_objective == "Count the rows of column a."
        assert state.graph.segment("1").status == SegmentStatus.GENERATED

    def test_generate_blocked_child_raises(self, tmp_path):
        config = AppConfig()
        config.store_path = str(tmp_path / "store")
        transcript = tiny_transcript([NONE_CORRECTION])
        transcript.completions["segment.categorize"] = ["analytical", "analytical"]
        transcript.completions["segment.group"] = ["no"]
        transcript.completions["segment.summarize"] = [
            jfence({"objective": "first", "depends_on": None, "relation": "elaboration"}),
            jfence({"objective": "second", "depends_on": 1, "relation": "cause_effect"}),
        ]
        pipeline = Pipeline(Store(tmp_path / "store"), config, transcript=transcript)
        dataset_id, _ = pipeline.ingest_dataset(b"a,b\n1,2\n", "demo")
        report = "# T\n\nfirst paragraph here.\n\nsecond paragraph here.\n"
        report_id, _, specs, _ = pipeline.add_report(report)
        assert len(specs) == 2
        state = pipeline.create_session(dataset_id, report_id)
        with pytest.raises(DependencyOrderError):
            pipeline.generate(state, "2")
        # parent failed -> child still blocked
        pipeline.generate(state, "1")
        assert state.graph.segment("1").status == SegmentStatus.FAILED
        with pytest.raises(DependencyOrderError):
            pipeline.generate(state, "2")

    def test_remove_clears_generated_state(self, pipeline):
        state = seeded_session(pipeline)
        pipeline.generate(state, "1")
        pipeline.remove(state, "1")
        assert state.graph.segments == []
        assert state.generated == {}

    def test_exhausted_transcript_surfaces_missing(self, pipeline):
        state = seeded_session(pipeline)
        pipeline.generate(state, "1")
        state.graph.segment("1").status = SegmentStatus.PENDING
        with pytest.raises(MissingTranscript):
            pipeline.generate(state, "1")

    def test_ordinals_persist_across_failed_generation(self, tmp_path):
        # A generation that dies mid-flight must still persist the gateway
        # ordinals it consumed, or a restarted session replays the wrong
        # transcript entries.
        from respark.errors import TransformationFailed

        config = AppConfig()
        config.store_path = str(tmp_path / "store")
        config.adapt.max_attempts = 1
        transcript = tiny_transcript([jfence({
            "result": "adapted", "objective": "adapted objective",
            "rationale": "fits",
            "dimensions": {"data_fields": "ok", "insight_dependency": "ok",
                           "data_scope": "ok"},
        })])
        transcript.completions["adapt.codegen"] = [fence("raise ValueError('no')")]
        pipeline = Pipeline(Store(tmp_path / "store"), config, transcript=transcript)
        state = seeded_session(pipeline)
        with pytest.raises(TransformationFailed):
            pipeline.generate(state, "1")

        reloaded = pipeline.load(state.id)
        assert reloaded.llm_counters.get("adapt.correct_objective") == 1
        assert reloaded.llm_counters.get("adapt.codegen") == 1
        assert reloaded.event_seq == state.event_seq


class TestInsertAndOutline:
    def seeded_generated(self, tmp_path):
        config = AppConfig()
        config.store_path = str(tmp_path / "store")
        pipeline = Pipeline(
            Store(tmp_path / "store"), config,
            transcript=tiny_transcript([jfence({
                "result": "adapted",
                "objective": "What does column a look like, really?",
                "rationale": "fits",
                "dimensions": {"data_fields": "ok", "insight_dependency": "ok",
                               "data_scope": "ok"},
            })]),
        )
        state = seeded_session(pipeline)
        pipeline.generate(state, "1")
        return pipeline, state

    def test_insert_generates_objective_and_places(self, tmp_path):
        pipeline, state = self.seeded_generated(tmp_path)
        pipeline.ensure_outline(state)
        new_id = pipeline.insert_segment_op(
            state, fields=["b"], relation="similarity", anchor="1"
        )
        assert new_id == "2"
        assert state.graph.segment("2").objective == "Inspect column b."
        assert state.outline.sections[0].segment_ids == ["1", "2"]

    def test_outline_inherited_and_title_regen(self, tmp_path):
        pipeline, state = self.seeded_generated(tmp_path)
        outline = pipeline.ensure_outline(state)
        assert outline.title == "Tiny report"
        assert outline.live_segment_ids() == ["1"]
        updated = pipeline.regenerate_outline_titles(state, "report")
        assert updated.title == "Fresh title"

    def test_export_resolves_store_charts(self, tmp_path):
        pipeline, state = self.seeded_generated(tmp_path)
        record = state.generated["1"].record
        assert record.chart.startswith("objects/")  # stashed, not a workdir path
        out = tmp_path / "export"
        path = pipeline.export(state, "markdown", out)
        text = path.read_text(encoding="utf-8")
        assert "![chart](assets/1.png)" in text
        assert (out / "assets" / "1.png").read_bytes().startswith(b"\x89PNG")

    def test_session_resumes_with_counters(self, tmp_path):
        pipeline, state = self.seeded_generated(tmp_path)
        config = AppConfig()
        config.store_path = str(tmp_path / "store")
        resumed_pipeline = Pipeline(
            Store(tmp_path / "store"), config,
            transcript=tiny_transcript([NONE_CORRECTION]),
        )
        resumed = resumed_pipeline.load(state.id)
        assert resumed.llm_counters == state.llm_counters
        assert resumed.graph.segment("1").status == SegmentStatus.GENERATED
        assert resumed.generated["1"].narrative == state.generated["1"].narrative
