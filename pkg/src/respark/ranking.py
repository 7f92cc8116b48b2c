"""Rank candidate reference reports against a target dataset.

Two complementary cosine scores: topic relevance (dataset name/description
versus the report's headings and extracted objectives) and field similarity
(dataset fields versus the fields the model infers the report's analysis
used). The two are summed into the final ranking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroVector
from .gateway import GatewaySession
from .ingest import DataSummary
from .report import ReportDoc


@dataclass
class ReportIndexEntry:
    report_id: str
    title: str
    headings: list[str] = field(default_factory=list)
    objectives: list[str] = field(default_factory=list)
    predicted_fields: list[tuple[str, str]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "report_id": self.report_id,
            "title": self.title,
            "headings": list(self.headings),
            "objectives": list(self.objectives),
            "predicted_fields": [list(p) for p in self.predicted_fields],
        }

    @classmethod
    def from_json(cls, data: dict) -> ReportIndexEntry:
        return cls(
            report_id=data["report_id"],
            title=data.get("title", ""),
            headings=list(data.get("headings", [])),
            objectives=list(data.get("objectives", [])),
            predicted_fields=[tuple(p) for p in data.get("predicted_fields", [])],
        )


@dataclass
class RankedReport:
    report_id: str
    topic_score: float
    field_score: float
    total: float

    def to_json(self) -> dict:
        return {
            "report_id": self.report_id,
            "topic_score": self.topic_score,
            "field_score": self.field_score,
            "total": self.total,
        }


def cosine(u: list[float], v: list[float]) -> float:
    """Cosine similarity of two nonzero vectors of equal dimension."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine is undefined for zero vectors")
    return float(np.dot(a, b) / (norm_a * norm_b))


class EmbeddingCache:
    """Per-(model, text) vector cache shared across ranking calls."""

    def __init__(self, model: str, entries: dict[str, list[float]] | None = None):
        self.model = model
        self.entries: dict[str, list[float]] = entries or {}

    def lookup(self, texts: list[str], session: GatewaySession) -> list[list[float]]:
        missing = [t for t in texts if t not in self.entries]
        if missing:
            vectors = session.embed(missing)
            for text, vector in zip(missing, vectors):
                self.entries[text] = vector
        return [self.entries[t] for t in texts]

    def to_json(self) -> dict:
        return {"model": self.model, "entries": self.entries}

    @classmethod
    def from_json(cls, data: dict) -> EmbeddingCache:
        return cls(model=data.get("model", ""), entries=data.get("entries", {}))


def _joined(*parts: str) -> str:
    return " ".join(p for p in parts if p)


def infer_report_fields(
    entry: ReportIndexEntry,
    doc: ReportDoc,
    session: GatewaySession,
) -> list[tuple[str, str]]:
    """Infer the key fields the report's analysis relied on; cached on the entry."""
    if entry.predicted_fields:
        return entry.predicted_fields
    payload = session.complete_structured(
        "rank.infer_fields",
        {
            "title": entry.title or doc.title,
            "headings": "; ".join(entry.headings) or "(none)",
            "objectives": "\n".join(f"- {o}" for o in entry.objectives) or "(none)",
        },
    )
    entry.predicted_fields = [(f["name"], f["description"]) for f in payload["fields"]]
    return entry.predicted_fields


class Ranker:
    """Scores index entries against a dataset summary."""

    def __init__(
        self,
        session: GatewaySession,
        cache: EmbeddingCache,
        field_weight: float = 1.0,
    ):
        self.session = session
        self.cache = cache
        self.field_weight = field_weight

    def topic_relevance(self, summary: DataSummary, entry: ReportIndexEntry) -> float:
        """Cosine between the dataset text and the mean report-topic embedding."""
        texts = entry.headings + entry.objectives
        if not texts:
            return 0.0
        topic_text = _joined(summary.dataset_name, summary.dataset_description)
        vectors = self.cache.lookup([topic_text] + texts, self.session)
        dataset_vec = np.asarray(vectors[0], dtype=np.float64)
        mean_vec = np.mean(np.asarray(vectors[1:], dtype=np.float64), axis=0)
        if float(np.linalg.norm(mean_vec)) == 0.0:
            return 0.0
        return cosine(dataset_vec.tolist(), mean_vec.tolist())

    def field_similarity(self, summary: DataSummary, entry: ReportIndexEntry) -> float:
        """Mean over dataset fields of the best cosine to any predicted field."""
        if not entry.predicted_fields or not summary.fields:
            return 0.0
        dataset_texts = [_joined(f.name, f.description) for f in summary.fields]
        predicted_texts = [_joined(name, desc) for name, desc in entry.predicted_fields]
        vectors = self.cache.lookup(dataset_texts + predicted_texts, self.session)
        dataset_vecs = vectors[: len(dataset_texts)]
        predicted_vecs = vectors[len(dataset_texts):]
        best: list[float] = []
        for dv in dataset_vecs:
            best.append(max(cosine(dv, pv) for pv in predicted_vecs))
        return float(sum(best) / len(best))

    def rank_reports(
        self,
        summary: DataSummary,
        entries: list[ReportIndexEntry],
    ) -> list[RankedReport]:
        """Score every entry and sort by summed score, ties by report id."""
        ranked = []
        for entry in entries:
            topic = self.topic_relevance(summary, entry)
            fields = self.field_similarity(summary, entry)
            ranked.append(
                RankedReport(
                    report_id=entry.report_id,
                    topic_score=topic,
                    field_score=fields,
                    total=topic + self.field_weight * fields,
                )
            )
        ranked.sort(key=lambda r: (-r.total, r.report_id))
        return ranked
