"""Dataset loading, per-field profiling, and the LLM-augmented data summary.

Handing a whole dataset to a language model is impractical, so prompts get
a compact summary instead: per-field statistics (type, unique count, range,
samples) computed here deterministically, plus short semantic descriptions
written by the model in a single batched call.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

from .errors import EmptyInput, MalformedLlmOutput, ParseError

# Values treated as missing, compared case-insensitively.
NULL_MARKERS = {"", "na", "n/a", "null"}

# Fixed date/time formats tried during type inference. A value is temporal
# if it parses under any one of these.
DATE_PATTERNS = (
    "%Y-%m-%d",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y/%m/%d",
    "%m/%d/%Y",
    "%m/%d/%Y %H:%M",
    "%b %d, %Y",
    "%d %b %Y",
)

SAMPLE_LIMIT = 5

# A column is numeric/temporal when at least this share of its non-null
# values parses; tolerant of stray bad cells.
TYPE_THRESHOLD = 0.95


class FieldType(Enum):
    NUMERIC = "numeric"
    TEMPORAL = "temporal"
    CATEGORICAL = "categorical"
    TEXT = "text"


@dataclass
class Column:
    name: str
    values: list[str]


@dataclass
class DataTable:
    """Raw parsed table; every cell is kept as text at this layer."""

    name: str
    columns: list[Column]
    row_count: int

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)


@dataclass
class FieldProfile:
    name: str
    inferred_type: FieldType
    unique_count: int
    null_count: int
    range: tuple[str, str] | None = None   # (min, max) rendered as text
    samples: list[str] = field(default_factory=list)
    description: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "inferred_type": self.inferred_type.value,
            "unique_count": self.unique_count,
            "null_count": self.null_count,
            "range": list(self.range) if self.range else None,
            "samples": list(self.samples),
            "description": self.description,
        }

    @classmethod
    def from_json(cls, data: dict) -> FieldProfile:
        return cls(
            name=data["name"],
            inferred_type=FieldType(data["inferred_type"]),
            unique_count=data["unique_count"],
            null_count=data["null_count"],
            range=tuple(data["range"]) if data.get("range") else None,
            samples=list(data.get("samples", [])),
            description=data.get("description", ""),
        )


@dataclass
class DataSummary:
    dataset_name: str
    dataset_description: str
    fields: list[FieldProfile]
    row_count: int

    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]

    def render(self) -> str:
        """Compact one-screen rendering used inside prompts."""
        lines = [
            f"Dataset: {self.dataset_name} ({self.row_count} rows)",
        ]
        if self.dataset_description:
            lines.append(f"Description: {self.dataset_description}")
        lines.append("Fields:")
        for f in self.fields:
            bits = [
                f"- {f.name} ({f.inferred_type.value})",
                f"unique={f.unique_count}",
                f"nulls={f.null_count}",
            ]
            if f.range:
                bits.append(f"range={f.range[0]}..{f.range[1]}")
            if f.samples:
                bits.append("samples=" + ", ".join(f.samples))
            line = "; ".join(bits)
            if f.description:
                line += f" :: {f.description}"
            lines.append(line)
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "dataset_description": self.dataset_description,
            "fields": [f.to_json() for f in self.fields],
            "row_count": self.row_count,
        }

    @classmethod
    def from_json(cls, data: dict) -> DataSummary:
        return cls(
            dataset_name=data["dataset_name"],
            dataset_description=data.get("dataset_description", ""),
            fields=[FieldProfile.from_json(f) for f in data.get("fields", [])],
            row_count=data["row_count"],
        )


def load_table(source: bytes | str, name: str, delimiter: str = ",") -> DataTable:
    """Parse delimiter-separated values with a required header row.

    Values stay text; typing happens in :func:`profile_field`. Raises
    ``ParseError`` naming the offending data row (1-based) when a row's
    field count disagrees with the header, and ``EmptyInput`` when there is
    no header at all.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    else:
        text = source.lstrip("\ufeff")
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = [row for row in reader]
    # csv emits empty lists for blank trailing lines; drop them.
    rows = [row for row in rows if row]
    if not rows:
        raise EmptyInput("no header row found")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise ParseError("header contains an empty column name")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise ParseError(f"duplicate column name(s): {', '.join(dupes)}")
    columns = [Column(name=h, values=[]) for h in header]
    for index, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ParseError(
                f"row {index}: expected {len(header)} fields, got {len(row)}"
            )
        for col, value in zip(columns, row):
            col.values.append(value)
    return DataTable(name=name, columns=columns, row_count=len(rows) - 1)


def _is_null(value: str) -> bool:
    return value.strip().lower() in NULL_MARKERS


def _parse_number(value: str) -> float | None:
    text = value.strip().replace(",", "")
    try:
        return float(text)
    except ValueError:
        return None


def _parse_date(value: str) -> datetime | None:
    text = value.strip()
    for pattern in DATE_PATTERNS:
        try:
            return datetime.strptime(text, pattern)
        except ValueError:
            continue
    return None


def _format_number(x: float) -> str:
    return str(int(x)) if x == int(x) else repr(x)


def profile_field(column: Column, row_count: int | None = None) -> FieldProfile:
    """Deterministic statistics for one column; description left empty."""
    total = row_count if row_count is not None else len(column.values)
    non_null = [v for v in column.values if not _is_null(v)]
    null_count = len(column.values) - len(non_null)

    seen: list[str] = []
    seen_set: set[str] = set()
    for v in non_null:
        if v not in seen_set:
            seen_set.add(v)
            seen.append(v)
    unique_count = len(seen)
    samples = seen[:SAMPLE_LIMIT]

    inferred = FieldType.TEXT
    value_range: tuple[str, str] | None = None
    if non_null:
        numbers = [_parse_number(v) for v in non_null]
        parsed_numbers = [n for n in numbers if n is not None]
        if len(parsed_numbers) >= TYPE_THRESHOLD * len(non_null):
            inferred = FieldType.NUMERIC
            value_range = (
                _format_number(min(parsed_numbers)),
                _format_number(max(parsed_numbers)),
            )
        else:
            dates = [_parse_date(v) for v in non_null]
            parsed_dates = [d for d in dates if d is not None]
            if len(parsed_dates) >= TYPE_THRESHOLD * len(non_null):
                inferred = FieldType.TEMPORAL
                value_range = (
                    min(parsed_dates).date().isoformat(),
                    max(parsed_dates).date().isoformat(),
                )
    if inferred is FieldType.TEXT:
        if unique_count <= max(20, 0.05 * max(total, 1)):
            inferred = FieldType.CATEGORICAL

    return FieldProfile(
        name=column.name,
        inferred_type=inferred,
        unique_count=unique_count,
        null_count=null_count,
        range=value_range,
        samples=samples,
    )


def profile_table(table: DataTable) -> list[FieldProfile]:
    return [profile_field(col, table.row_count) for col in table.columns]


def summarize_dataset(table: DataTable, profiles: list[FieldProfile], session) -> DataSummary:
    """Fill in semantic descriptions with one batched gateway call.

    Statistics pass through unchanged; the model only writes the dataset
    description and one line per field.
    """
    draft = DataSummary(
        dataset_name=table.name,
        dataset_description="",
        fields=profiles,
        row_count=table.row_count,
    )

    def check(payload: dict) -> None:
        described = {f["name"]: f["description"] for f in payload["fields"]}
        missing = [f.name for f in profiles if not described.get(f.name)]
        if missing:
            raise MalformedLlmOutput(
                "descriptions missing for field(s): " + ", ".join(missing)
            )

    payload = session.complete_structured(
        "ingest.summarize",
        {"dataset_name": table.name, "profile": draft.render()},
        check=check,
    )
    described = {f["name"]: f["description"] for f in payload["fields"]}
    described_fields = [
        FieldProfile(
            name=p.name,
            inferred_type=p.inferred_type,
            unique_count=p.unique_count,
            null_count=p.null_count,
            range=p.range,
            samples=list(p.samples),
            description=described[p.name],
        )
        for p in profiles
    ]
    return DataSummary(
        dataset_name=table.name,
        dataset_description=payload["dataset_description"],
        fields=described_fields,
        row_count=table.row_count,
    )
