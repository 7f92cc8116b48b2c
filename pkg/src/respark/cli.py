"""Batch and operations entry points.

Every subcommand is a thin wrapper over the same pipeline layer the HTTP
service exposes, so the two never drift. ``--mock`` points at a scripted
transcript and makes runs fully offline and bit-reproducible.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config
from .errors import ResparkError
from .gateway import Transcript
from .model import SegmentStatus
from .pipeline import Pipeline
from .report import eval_segmentation, parse_report, predicted_boundaries, segment_report
from .store import Store
from .util import canonical_json


def _build_config(config_path: str | None, store: str | None, mock: str | None) -> AppConfig:
    config = load_config(config_path)
    if store:
        config.store_path = store
    if mock:
        config.llm.provider = "mock"
        config.llm.transcript = mock
    return config


def _pipeline(config: AppConfig) -> Pipeline:
    return Pipeline(Store(config.store_path), config)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Path to a respark.toml configuration file.")
@click.option("--store", type=click.Path(), default=None,
              help="Store directory (overrides store.path from the config).")
@click.option("--mock", type=click.Path(exists=True), default=None,
              help="Transcript file; forces the mock provider.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, config_path, store, mock, as_json):
    """Generate data reports by reusing the analysis logic of existing ones."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = _build_config(config_path, store, mock)
    ctx.obj["as_json"] = as_json


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
def serve(ctx, host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    config: AppConfig = ctx.obj["config"]
    addr_host, _, addr_port = config.server_addr.partition(":")
    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(config, ui_dir=ui_dir if ui_dir.is_dir() else None)
    uvicorn.run(app, host=host or addr_host or "127.0.0.1",
                port=port or int(addr_port or 8040))


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--name", required=True)
@click.pass_context
def ingest(ctx, csv_path, name):
    """Profile and summarize a dataset, storing it for later runs."""
    pipeline = _pipeline(ctx.obj["config"])
    try:
        dataset_id, summary = pipeline.ingest_dataset(Path(csv_path).read_bytes(), name)
    except ResparkError as exc:
        _fail(str(exc))
    if ctx.obj["as_json"]:
        click.echo(json.dumps({"dataset_id": dataset_id, "summary": summary.to_json()}))
    else:
        click.echo(f"dataset {dataset_id}")
        click.echo(summary.render())


@main.command()
@click.argument("report_path", type=click.Path(exists=True))
@click.option("--eval", "gold_path", type=click.Path(exists=True), default=None,
              help="Gold annotation file; prints P/R/F1 against it.")
@click.option("--register/--no-register", default=True,
              help="Store the segmented report in the repository.")
@click.pass_context
def segment(ctx, report_path, gold_path, register):
    """Segment a reference report; optionally score against gold boundaries."""
    pipeline = _pipeline(ctx.obj["config"])
    report_file = Path(report_path)
    text = report_file.read_text(encoding="utf-8")
    images: dict[str, bytes] = {}
    doc = parse_report(text)
    for block in doc.blocks:
        if block.image:
            asset = report_file.parent / block.image
            if asset.is_file():
                images[block.image] = asset.read_bytes()
    try:
        if register:
            report_id, doc, specs, non_analytical = pipeline.add_report(
                text, images, source_uri=str(report_file)
            )
        else:
            report_id = ""
            specs, non_analytical = segment_report(doc, pipeline.fresh_gateway())
    except ResparkError as exc:
        _fail(str(exc))

    result = {
        "report_id": report_id,
        "title": doc.title,
        "segments": [s.to_json() for s in specs],
        "non_analytical": non_analytical,
    }
    if gold_path:
        gold = json.loads(Path(gold_path).read_text(encoding="utf-8"))
        scores = eval_segmentation(predicted_boundaries(specs), set(gold["boundaries"]))
        result["eval"] = scores.to_json()
    if ctx.obj["as_json"]:
        click.echo(json.dumps(result))
    else:
        if report_id:
            click.echo(f"report {report_id}: {doc.title}")
        for i, spec in enumerate(specs, start=1):
            dep = "data" if spec.depends_on is None else f"segment {spec.depends_on + 1}"
            click.echo(f"{i}. [{spec.relation.value} of {dep}] {spec.objective}")
        if non_analytical:
            click.echo(f"non-analytical blocks: {non_analytical}")
        if gold_path:
            e = result["eval"]
            click.echo(
                f"P={e['precision']:.3f} R={e['recall']:.3f} F1={e['f1']:.3f}"
            )


@main.command()
@click.argument("dataset_id")
@click.pass_context
def rank(ctx, dataset_id):
    """Rank stored reports against a dataset."""
    pipeline = _pipeline(ctx.obj["config"])
    if not pipeline.store.has_dataset(dataset_id):
        _fail(f"unknown dataset: {dataset_id}")
    try:
        ranked = pipeline.rank_for_dataset(dataset_id)
    except ResparkError as exc:
        _fail(str(exc))
    rows = []
    for r in ranked:
        index = pipeline.store.report_index(r.report_id)
        rows.append({**r.to_json(), "title": index.get("title", "")})
    if ctx.obj["as_json"]:
        click.echo(json.dumps({"reports": rows}))
    else:
        for i, row in enumerate(rows, start=1):
            click.echo(
                f"{i}. {row['report_id']} total={row['total']:.4f} "
                f"(topic={row['topic_score']:.4f}, fields={row['field_score']:.4f}) "
                f"{row['title']}"
            )


@main.command()
@click.argument("dataset_id")
@click.argument("report_id")
@click.option("--out", "out_dir", type=click.Path(), default="respark-out")
@click.option("--scenario", type=click.Path(exists=True), default=None,
              help="JSON list of recorded user actions to replay after the "
                   "initial generation pass.")
@click.pass_context
def generate(ctx, dataset_id, report_id, out_dir, scenario):
    """Run the full non-interactive pipeline and export the report."""
    pipeline = _pipeline(ctx.obj["config"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if not pipeline.store.has_dataset(dataset_id):
            raise ResparkError(f"unknown dataset: {dataset_id}")
        if not pipeline.store.has_report(report_id):
            raise ResparkError(f"unknown report: {report_id}")
        state = pipeline.create_session(dataset_id, report_id)

        def dump_segments() -> None:
            segments_dir = out / "segments"
            segments_dir.mkdir(exist_ok=True)
            for sid, generated in sorted(state.generated.items(), key=lambda kv: kv[0]):
                (segments_dir / f"{sid}.json").write_text(
                    canonical_json(generated.to_json()), encoding="utf-8"
                )

        pipeline.generate_all_pending(state)
        # Snapshot now so segments later removed by the scenario still leave
        # their artifacts (failure reasons included) for inspection.
        dump_segments()
        if scenario:
            steps = json.loads(Path(scenario).read_text(encoding="utf-8"))
            pipeline.run_scenario(state, steps)
            dump_segments()
        (out / "graph.json").write_text(
            canonical_json(state.graph.to_json()), encoding="utf-8"
        )
        pipeline.ensure_outline(state)
        pipeline.export(state, "markdown", out)
        pipeline.export(state, "html", out)
        (out / "events.json").write_text(
            canonical_json({"events": state.events}), encoding="utf-8"
        )
    except ResparkError as exc:
        _fail(str(exc))
    skipped = [s.id for s in state.graph.segments if s.status == SegmentStatus.FAILED]
    if ctx.obj["as_json"]:
        click.echo(json.dumps({
            "session": state.id,
            "out": str(out),
            "generated": sorted(state.generated),
            "failed": skipped,
        }))
    else:
        click.echo(f"exported to {out} ({len(state.generated)} segments"
                   + (f", failed: {', '.join(skipped)}" if skipped else "") + ")")


@main.command(name="eval-seg")
@click.option("--corpus", type=click.Path(exists=True), required=True,
              help="Directory with reports/*.md, gold/*.json and (for mock "
                   "runs) transcripts/*.json.")
@click.pass_context
def eval_seg(ctx, corpus):
    """Segment an annotated corpus and print aggregate P/R/F1."""
    config: AppConfig = ctx.obj["config"]
    corpus_dir = Path(corpus)
    report_files = sorted((corpus_dir / "reports").glob("*.md"))
    if not report_files:
        _fail(f"no reports found under {corpus_dir / 'reports'}")
    tp = fp = fn = 0
    per_report = []
    for report_file in report_files:
        report_id = report_file.stem
        gold_file = corpus_dir / "gold" / f"{report_id}.json"
        if not gold_file.is_file():
            _fail(f"missing gold annotation for {report_id}")
        gold = json.loads(gold_file.read_text(encoding="utf-8"))
        transcript = None
        if config.llm.provider == "mock":
            transcript_file = corpus_dir / "transcripts" / f"{report_id}.json"
            if not transcript_file.is_file() and config.llm.transcript:
                transcript_file = Path(config.llm.transcript)
            if not transcript_file.is_file():
                _fail(f"mock run but no transcript for {report_id}")
            transcript = Transcript.load(transcript_file)
        from .gateway import Gateway

        doc = parse_report(report_file.read_text(encoding="utf-8"))
        session = Gateway(config.llm, transcript).session()
        try:
            specs, _ = segment_report(doc, session)
        except ResparkError as exc:
            _fail(f"{report_id}: {exc}")
        scores = eval_segmentation(predicted_boundaries(specs), set(gold["boundaries"]))
        tp += scores.true_positive
        fp += scores.false_positive
        fn += scores.false_negative
        per_report.append({"report_id": report_id, **scores.to_json()})

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    aggregate = {"precision": precision, "recall": recall, "f1": f1,
                 "true_positive": tp, "false_positive": fp, "false_negative": fn}
    if ctx.obj["as_json"]:
        click.echo(json.dumps({"reports": per_report, "aggregate": aggregate}))
    else:
        for row in per_report:
            click.echo(
                f"{row['report_id']}: P={row['precision']:.3f} "
                f"R={row['recall']:.3f} F1={row['f1']:.3f}"
            )
        click.echo(
            f"aggregate (micro): P={precision:.3f} R={recall:.3f} F1={f1:.3f}"
        )


if __name__ == "__main__":
    main()
