"""CSV loading, field profiling, and the batched summary call."""

from __future__ import annotations

import pytest

from respark.config import LlmConfig
from respark.errors import EmptyInput, ParseError
from respark.gateway import Gateway, Transcript
from respark.ingest import (
    Column,
    FieldType,
    load_table,
    profile_field,
    profile_table,
    summarize_dataset,
)
from respark.util import canonical_json


class TestLoadTable:
    def test_basic(self):
        table = load_table("a,b\n1,2\n3,4\n5,6\n", "t")
        assert table.row_count == 3
        assert [c.name for c in table.columns] == ["a", "b"]
        assert table.column("a").values == ["1", "3", "5"]

    def test_header_only(self):
        table = load_table("a,b\n", "t")
        assert table.row_count == 0

    def test_extra_delimiter_names_row(self):
        with pytest.raises(ParseError, match="row 2"):
            load_table("a,b\n1,2\n1,2,3\n", "t")

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            load_table("", "t")

    def test_duplicate_columns(self):
        with pytest.raises(ParseError, match="duplicate"):
            load_table("a, a\n1,2\n", "t")

    def test_quoted_values_and_custom_delimiter(self):
        table = load_table('a;b\n"x;y";2\n', "t", delimiter=";")
        assert table.column("a").values == ["x;y"]

    def test_bytes_with_bom(self):
        table = load_table("\ufeffa,b\n1,2\n".encode("utf-8"), "t")
        assert [c.name for c in table.columns] == ["a", "b"]


class TestProfileField:
    def test_numeric_with_null(self):
        # oracle: hand count over [1, 2, 2, ""]
        p = profile_field(Column("x", ["1", "2", "2", ""]))
        assert p.inferred_type == FieldType.NUMERIC
        assert p.unique_count == 2
        assert p.null_count == 1
        assert p.range == ("1", "2")

    def test_temporal_range(self):
        # oracle: hand parse of two ISO dates
        p = profile_field(Column("d", ["2020-01-02", "2021-03-04"]))
        assert p.inferred_type == FieldType.TEMPORAL
        assert p.range == ("2020-01-02", "2021-03-04")

    def test_constant_categorical(self):
        p = profile_field(Column("c", ["a", "a", "a"]))
        assert p.inferred_type == FieldType.CATEGORICAL
        assert p.unique_count == 1
        assert p.samples == ["a"]

    def test_samples_first_occurrence_capped(self):
        values = ["v%d" % (i % 7) for i in range(20)]
        p = profile_field(Column("c", values))
        assert p.samples == ["v0", "v1", "v2", "v3", "v4"]

    def test_mostly_numeric_tolerates_stray_cell(self):
        values = ["1"] * 99 + ["oops"]
        p = profile_field(Column("x", values))
        assert p.inferred_type == FieldType.NUMERIC

    def test_high_cardinality_text(self):
        values = [f"sentence number {i}" for i in range(500)]
        p = profile_field(Column("x", values))
        assert p.inferred_type == FieldType.TEXT

    def test_null_markers(self):
        p = profile_field(Column("x", ["NA", "n/a", "null", "", "7"]))
        assert p.null_count == 4
        assert p.unique_count == 1

    def test_deterministic(self):
        col = Column("x", ["1", "2", ""])
        assert canonical_json(profile_field(col).to_json()) == canonical_json(
            profile_field(col).to_json()
        )


class TestSummarize:
    def _mock_session(self, reply: dict, calls: list | None = None):
        transcript = Transcript(
            completions={"ingest.summarize": ["```json\n%s\n```" % __import__("json").dumps(reply)]}
        )
        gw = Gateway(LlmConfig(provider="mock"), transcript)
        return gw.session()

    def test_pass_through(self):
        table = load_table("a,b\n1,2\n", "demo")
        profiles = profile_table(table)
        reply = {
            "dataset_description": "a tiny demo table",
            "fields": [
                {"name": "a", "description": "first"},
                {"name": "b", "description": "second"},
            ],
        }
        session = self._mock_session(reply)
        summary = summarize_dataset(table, profiles, session)
        assert summary.dataset_description == "a tiny demo table"
        assert [f.description for f in summary.fields] == ["first", "second"]
        # statistics untouched
        assert [f.unique_count for f in summary.fields] == [1, 1]

    def test_single_request_for_many_fields(self):
        header = ",".join(f"f{i}" for i in range(50))
        row = ",".join("1" for _ in range(50))
        table = load_table(f"{header}\n{row}\n", "wide")
        profiles = profile_table(table)
        reply = {
            "dataset_description": "wide",
            "fields": [{"name": f"f{i}", "description": "col"} for i in range(50)],
        }
        session = self._mock_session(reply)
        summarize_dataset(table, profiles, session)
        # oracle: the mock call counter -- exactly one completion issued
        completions = [r for r in session.audit if r.kind == "complete"]
        assert len(completions) == 1
