"""CLI behavior: subcommands, exit codes, JSON output, corpus evaluation."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from respark.cli import main

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
TRANSCRIPT = str(FIXTURES / "transcripts" / "scenario_la.json")


@pytest.fixture
def runner():
    return CliRunner()


def run_ok(runner, *args):
    result = runner.invoke(main, list(args), catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def base_args(tmp_path) -> list[str]:
    return ["--store", str(tmp_path / "store"), "--mock", TRANSCRIPT, "--json"]


def seed(runner, tmp_path) -> tuple[str, str]:
    ingest = run_ok(
        runner, *base_args(tmp_path), "ingest",
        str(FIXTURES / "la_crime.csv"), "--name", "LA Crime",
    )
    dataset_id = json.loads(ingest.output.strip().splitlines()[-1])["dataset_id"]
    segment = run_ok(
        runner, *base_args(tmp_path), "segment",
        str(FIXTURES / "chicago_report" / "report.md"),
    )
    report_id = json.loads(segment.output.strip().splitlines()[-1])["report_id"]
    return dataset_id, report_id


class TestIngest:
    def test_prints_summary(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["--store", str(tmp_path / "s"), "--mock", TRANSCRIPT, "ingest",
             str(FIXTURES / "la_crime.csv"), "--name", "LA Crime"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert "Dataset: LA Crime (57 rows)" in result.output
        assert "Crm Cd Desc" in result.output

    def test_bad_csv_nonzero_exit(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2,3\n", encoding="utf-8")
        result = runner.invoke(
            main,
            ["--store", str(tmp_path / "s"), "--mock", TRANSCRIPT, "ingest",
             str(bad), "--name", "x"],
        )
        assert result.exit_code == 1
        assert "error:" in result.output


class TestSegment:
    def test_registers_and_lists_segments(self, runner, tmp_path):
        _, report_id = seed(runner, tmp_path)
        assert report_id.startswith("rep-")

    def test_eval_against_gold(self, runner, tmp_path):
        gold = tmp_path / "gold.json"
        gold.write_text(json.dumps({
            "report_id": "chicago", "boundaries": [2, 4, 7, 9, 12, 14],
            "non_analytical": [0],
        }), encoding="utf-8")
        result = run_ok(
            runner, *base_args(tmp_path), "segment",
            str(FIXTURES / "chicago_report" / "report.md"),
            "--eval", str(gold), "--no-register",
        )
        payload = json.loads(result.output.strip().splitlines()[-1])
        assert payload["eval"]["f1"] == 1.0


class TestRank:
    def test_rank_lists_reports(self, runner, tmp_path):
        dataset_id, report_id = seed(runner, tmp_path)
        result = run_ok(runner, *base_args(tmp_path), "rank", dataset_id)
        payload = json.loads(result.output.strip().splitlines()[-1])
        assert payload["reports"][0]["report_id"] == report_id
        assert payload["reports"][0]["total"] == pytest.approx(2.0, abs=1e-9)

    def test_unknown_dataset(self, runner, tmp_path):
        result = runner.invoke(main, [*base_args(tmp_path), "rank", "ds-nope"])
        assert result.exit_code == 1


class TestGenerate:
    def test_scenario_run_matches_golden(self, runner, tmp_path):
        dataset_id, report_id = seed(runner, tmp_path)
        out = tmp_path / "out"
        run_ok(
            runner, *base_args(tmp_path), "generate", dataset_id, report_id,
            "--out", str(out), "--scenario", str(FIXTURES / "scenario_la_steps.json"),
        )
        golden = (FIXTURES / "golden" / "report.md").read_text(encoding="utf-8")
        assert (out / "report.md").read_text(encoding="utf-8") == golden
        seg6 = json.loads((out / "segments" / "6.json").read_text(encoding="utf-8"))
        assert seg6["status"] == "failed"

    def test_unknown_ids_nonzero_exit(self, runner, tmp_path):
        result = runner.invoke(
            main,
            [*base_args(tmp_path), "generate", "ds-nope", "rep-nope",
             "--out", str(tmp_path / "out")],
        )
        assert result.exit_code == 1
        assert "error: unknown dataset" in result.output

    def test_plain_run_skips_failed(self, runner, tmp_path):
        dataset_id, report_id = seed(runner, tmp_path)
        out = tmp_path / "out"
        result = run_ok(
            runner, *base_args(tmp_path), "generate", dataset_id, report_id,
            "--out", str(out),
        )
        payload = json.loads(result.output.strip().splitlines()[-1])
        assert payload["failed"] == ["6"]
        text = (out / "report.md").read_text(encoding="utf-8")
        # failed segment omitted from the export
        assert "since 2000" not in text


class TestEvalSeg:
    def test_corpus_transcripts_reproduce_gold(self, runner, tmp_path):
        config = tmp_path / "respark.toml"
        config.write_text('[llm]\nprovider = "mock"\n', encoding="utf-8")
        result = run_ok(
            runner, "--config", str(config), "--store", str(tmp_path / "s"), "--json",
            "eval-seg", "--corpus", str(FIXTURES / "seg_corpus"),
        )
        payload = json.loads(result.output.strip().splitlines()[-1])
        assert payload["aggregate"] == {
            "precision": 1.0, "recall": 1.0, "f1": 1.0,
            "true_positive": payload["aggregate"]["true_positive"],
            "false_positive": 0, "false_negative": 0,
        }
        assert len(payload["reports"]) == 10
        assert all(r["f1"] == 1.0 for r in payload["reports"])
