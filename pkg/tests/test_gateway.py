"""Gateway behavior: transcripts, ordinals, structured retries, audit replay."""

from __future__ import annotations

import json

import pytest

from respark.config import LlmConfig
from respark.errors import MalformedLlmOutput, MissingTranscript
from respark.gateway import (
    Gateway,
    Transcript,
    audit_to_transcript,
    extract_code_block,
    hash_embedding,
)


def mock_gateway(completions=None, embeddings=None, max_retries=2) -> Gateway:
    return Gateway(
        LlmConfig(provider="mock", max_retries=max_retries),
        Transcript(completions=completions or {}, embeddings=embeddings or {}),
    )


class TestMockCompletion:
    def test_scripted_reply_verbatim(self):
        gw = mock_gateway({"segment.match": ["yes, clearly"]})
        session = gw.session()
        reply = session.complete(
            "segment.match", {"chart_ref": "chart #1", "paragraph": "p"}
        )
        assert reply == "yes, clearly"

    def test_ordinals_advance_per_template(self):
        gw = mock_gateway({"segment.match": ["no", "yes"], "segment.categorize": ["analytical"]})
        session = gw.session()
        assert session.complete("segment.match", {"chart_ref": "c", "paragraph": "p"}) == "no"
        assert session.complete("segment.categorize", {"paragraph": "p"}) == "analytical"
        assert session.complete("segment.match", {"chart_ref": "c", "paragraph": "p"}) == "yes"

    def test_missing_transcript(self):
        session = mock_gateway().session()
        with pytest.raises(MissingTranscript):
            session.complete("segment.match", {"chart_ref": "c", "paragraph": "p"})

    def test_unbound_placeholder(self):
        session = mock_gateway({"segment.match": ["yes"]}).session()
        with pytest.raises(ValueError, match="placeholder"):
            session.complete("segment.match", {"paragraph": "p"})


class TestStructured:
    def test_retry_on_schema_violation(self):
        bad = "```json\n{\"title\": 3}\n```"
        good = "```json\n{\"title\": \"ok\"}\n```"
        gw = mock_gateway({"organize.title": [bad, good]})
        session = gw.session()
        payload = session.complete_structured("organize.title", {"content": "x"})
        assert payload == {"title": "ok"}
        # oracle: the mock log -- two calls means retry count 1
        assert len([r for r in session.audit if r.kind == "complete"]) == 2
        assert "invalid" in session.audit[1].prompt

    def test_exhausted_retries(self):
        gw = mock_gateway({"organize.title": ["nope", "still nope", "no"]}, max_retries=2)
        session = gw.session()
        with pytest.raises(MalformedLlmOutput):
            session.complete_structured("organize.title", {"content": "x"})

    def test_semantic_check_triggers_retry(self):
        replies = [
            "```json\n{\"title\": \"forbidden\"}\n```",
            "```json\n{\"title\": \"fine\"}\n```",
        ]
        session = mock_gateway({"organize.title": replies}).session()

        def check(payload):
            if payload["title"] == "forbidden":
                raise MalformedLlmOutput("title not allowed")

        assert session.complete_structured("organize.title", {"content": "x"}, check=check) == {
            "title": "fine"
        }

    def test_bare_json_accepted(self):
        session = mock_gateway({"organize.title": ['{"title": "bare"}']}).session()
        assert session.complete_structured("organize.title", {"content": "x"})["title"] == "bare"


class TestEmbeddings:
    def test_shapes_equal(self):
        session = mock_gateway().session()
        vectors = session.embed(["a", "b", "c"])
        assert len(vectors) == 3
        assert len({len(v) for v in vectors}) == 1

    def test_scripted_vectors(self):
        session = mock_gateway(embeddings={"a": [1.0, 0.0], "b": [0.0, 1.0]}).session()
        assert session.embed(["a", "b"]) == [[1.0, 0.0], [0.0, 1.0]]

    def test_hash_embedding_deterministic_unit(self):
        v1 = hash_embedding("hello")
        v2 = hash_embedding("hello")
        assert v1 == v2
        assert abs(sum(x * x for x in v1) - 1.0) < 1e-9
        assert hash_embedding("hello") != hash_embedding("world")


class TestAuditReplay:
    def test_replaying_audit_reproduces_session(self):
        gw = mock_gateway(
            {"segment.categorize": ["analytical", "non-analytical"]},
        )
        session = gw.session()
        first = [
            session.complete("segment.categorize", {"paragraph": "p1"}),
            session.complete("segment.categorize", {"paragraph": "p2"}),
        ]
        vectors = session.embed(["p1"])

        replay_transcript = audit_to_transcript(session.audit)
        replay = Gateway(LlmConfig(provider="mock"), replay_transcript).session()
        second = [
            replay.complete("segment.categorize", {"paragraph": "p1"}),
            replay.complete("segment.categorize", {"paragraph": "p2"}),
        ]
        assert second == first
        assert replay.embed(["p1"]) == vectors


def test_extract_code_block_takes_last_fence():
    text = "plan:\n```text\nnotes\n```\ncode:\n```python\nprint(1)\n```"
    assert extract_code_block(text) == "print(1)"


def test_transcript_round_trip(tmp_path):
    t = Transcript(completions={"a.b": ["x"]}, embeddings={"t": [1.0]})
    path = tmp_path / "t.json"
    path.write_text(json.dumps(t.to_json()), encoding="utf-8")
    loaded = Transcript.load(path)
    assert loaded.completions == t.completions
    assert loaded.embeddings == t.embeddings
