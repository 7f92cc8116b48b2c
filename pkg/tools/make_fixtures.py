"""Regenerate the bundled fixtures: demo dataset, reference reports,
scripted mock transcripts, and the annotated segmentation corpus.

Transcripts are not written by hand: for each report we declare the
intended segmentation, let a planner session answer the real segmentation
algorithm's questions accordingly, and record the replies in invocation
order. The script verifies that replaying the recorded transcript through
the real mock gateway reproduces the intended result before writing
anything.

Run from the repository root:  python3 tools/make_fixtures.py
"""

from __future__ import annotations

import json
import re
import struct
import sys
import zlib
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from respark.config import LlmConfig
from respark.gateway import (
    AuditRecord,
    Gateway,
    Transcript,
    audit_to_transcript,
    extract_json_block,
)
from respark.ingest import load_table, profile_table
from respark.report import (
    BlockKind,
    ReportDoc,
    parse_markdown_report,
    predicted_boundaries,
    segment_report,
)

FIXTURES = ROOT / "fixtures"


# --- tiny deterministic PNG painter ------------------------------------------

def _chunk(tag: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + tag
        + data
        + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
    )


def bar_png_bytes(values, width=240, height=120) -> bytes:
    vmax = max(list(values) + [1])
    n = max(1, len(values))
    raw = b""
    for y in range(height):
        row = bytearray(b"\x00")
        for x in range(width):
            i = min(n - 1, x * n // width)
            bar = int(values[i] * (height - 10) / vmax)
            if y >= height - bar and x > i * width // n:
                row += bytes((54, 98, 227))
            else:
                row += bytes((240, 243, 250))
        raw += bytes(row)
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(raw, 9))
        + _chunk(b"IEND", b"")
    )


# --- dataset -------------------------------------------------------------------

CRIME_TYPES = [
    "BATTERY - SIMPLE ASSAULT",
    "THEFT - PETTY",
    "VEHICLE - STOLEN",
    "BURGLARY",
    "ARSON",
    "VANDALISM - FELONY",
]

# incidents per (year, type); totals 11 / 12 / 18 / 16 with the peak in 2022
COUNTS = {
    "2020": [2, 2, 1, 3, 1, 2],
    "2021": [2, 3, 2, 2, 2, 1],
    "2022": [3, 6, 4, 2, 3, 0],
    "2023": [3, 6, 3, 1, 2, 1],
}

# arson happens at night/evening so the inserted time-of-day segment has a story
ARSON_TIMES = ["0130", "0215", "2310", "0045", "1430", "2240", "0310", "2130"]

OTHER_TIMES = ["0830", "1015", "1230", "1445", "1620", "1815", "1950", "2105",
               "0940", "1320", "1700", "2020"]

MONTHS = ["01", "03", "05", "07", "09", "11"]


def build_la_crime_csv() -> str:
    rows = []
    dr_no = 200100001
    arson_i = 0
    other_i = 0
    for year in sorted(COUNTS):
        for type_index, count in enumerate(COUNTS[year]):
            for k in range(count):
                crime = CRIME_TYPES[type_index]
                month = MONTHS[(type_index + k) % len(MONTHS)]
                day = f"{(type_index * 5 + k * 3) % 27 + 1:02d}"
                if crime == "ARSON":
                    time_occ = ARSON_TIMES[arson_i % len(ARSON_TIMES)]
                    arson_i += 1
                else:
                    time_occ = OTHER_TIMES[other_i % len(OTHER_TIMES)]
                    other_i += 1
                area = str((type_index * 3 + k) % 21 + 1)
                age = str(18 + (type_index * 7 + k * 11) % 55)
                rows.append([str(dr_no), f"{year}-{month}-{day}", time_occ, area, crime, age])
                dr_no += 1
    lines = ["DR_NO,Date Occ,Time Occ,AREA,Crm Cd Desc,Vict Age"]
    lines += [",".join(f'"{v}"' if "," in v else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# --- planner: derive transcripts from an intended segmentation -------------------

class PlanSession:
    """Stands in for a gateway session during fixture planning.

    Answers the segmentation algorithm's questions from the declared intent
    and records every reply so the audit can be folded into a transcript.
    """

    def __init__(self, doc: ReportDoc, para_to_chart, analytical, groups, summaries,
                 scripted=None):
        self.doc = doc
        self.text_to_id = {b.text: b.id for b in doc.blocks if b.text}
        self.para_to_chart = para_to_chart
        self.analytical = analytical
        self.group_of = {}
        for gi, ids in enumerate(groups):
            for bid in ids:
                self.group_of[bid] = gi
        self.summaries_by_content = summaries
        self.scripted = scripted or {}
        self.counters: dict[str, int] = {}
        self.audit: list[AuditRecord] = []

    def _record(self, template_id: str, response: str) -> None:
        ordinal = self.counters.get(template_id, 0)
        self.counters[template_id] = ordinal + 1
        self.audit.append(
            AuditRecord(kind="complete", template_id=template_id,
                        ordinal=ordinal, prompt="", response=response)
        )

    def _reply(self, template_id: str, bindings: dict) -> str:
        if template_id == "segment.match":
            asked = int(re.search(r"chart #(\d+)", bindings["chart_ref"]).group(1))
            para = self.text_to_id[bindings["paragraph"]]
            return "yes" if self.para_to_chart.get(para) == asked else "no"
        if template_id == "segment.categorize":
            para = self.text_to_id[bindings["paragraph"]]
            return "analytical" if para in self.analytical else "non-analytical"
        if template_id == "segment.group":
            first = self.text_to_id[bindings["first"]]
            second = self.text_to_id[bindings["second"]]
            same = self.group_of.get(first) is not None and (
                self.group_of.get(first) == self.group_of.get(second)
            )
            return "yes" if same else "no"
        if template_id == "segment.summarize":
            summary = self.summaries_by_content[bindings["content"]]
            return "```json\n" + json.dumps(summary) + "\n```"
        if template_id in self.scripted:
            ordinal = self.counters.get(template_id, 0)
            return self.scripted[template_id][ordinal]
        raise KeyError(f"planner has no reply for {template_id}")

    def complete(self, template_id: str, bindings: dict) -> str:
        response = self._reply(template_id, bindings)
        self._record(template_id, response)
        return response

    def complete_structured(self, template_id: str, bindings: dict, check=None) -> dict:
        response = self._reply(template_id, bindings)
        self._record(template_id, response)
        payload = extract_json_block(response)
        if check is not None:
            check(payload)
        return payload


def plan_report_transcript(source: dict) -> tuple[str, dict[str, bytes], Transcript, dict]:
    """Build (markdown, images, transcript, gold) for one declared report.

    ``source`` declares title, items and per-group summaries; see the
    definitions below for the shape.
    """
    lines = [f"# {source['title']}", ""]
    blocks = []          # (kind, text/image)
    for item in source["items"]:
        kind = item[0]
        if kind == "heading":
            lines += [f"## {item[1]}", ""]
            blocks.append(("heading", item[1]))
        elif kind == "para":
            lines += [item[1], ""]
            blocks.append(("para", item[1]))
        elif kind == "chart":
            lines += [f"![chart]({item[1]})", ""]
            blocks.append(("chart", item[1]))
    markdown = "\n".join(lines).rstrip("\n") + "\n"

    images = {
        item[1]: bar_png_bytes(item[2])
        for item in source["items"]
        if item[0] == "chart"
    }
    doc = parse_markdown_report(markdown)

    # Resolve declared group labels to block ids.
    label_blocks: dict[str, list[int]] = {}
    na_ids: list[int] = []
    for block_id, item in enumerate(source["items"]):
        label = item[-1] if item[0] != "heading" else None
        if item[0] == "heading":
            continue
        if label == "na":
            na_ids.append(block_id)
        elif label is not None:
            label_blocks.setdefault(label, []).append(block_id)

    para_to_chart: dict[int, int | None] = {}
    analytical: set[int] = set()
    text_groups: list[list[int]] = []
    final_groups: list[tuple[str, list[int]]] = []
    for label, ids in label_blocks.items():
        chart_ids = [b for b in ids if doc.blocks[b].kind == BlockKind.CHART]
        para_ids = [b for b in ids if doc.blocks[b].kind == BlockKind.PARAGRAPH]
        if chart_ids:
            for pid in para_ids:
                para_to_chart[pid] = chart_ids[0]
        else:
            analytical.update(para_ids)
            text_groups.append(sorted(para_ids))
        final_groups.append((label, sorted(ids)))
    final_groups.sort(key=lambda pair: pair[1][0])

    from respark.report import _group_content  # fixture tooling only

    summaries_by_content = {
        _group_content(doc, ids): source["summaries"][label]
        for label, ids in final_groups
    }

    planner = PlanSession(doc, para_to_chart, analytical, text_groups,
                          summaries_by_content, scripted=source.get("scripted"))
    specs, non_analytical = segment_report(doc, planner)
    assert non_analytical == sorted(na_ids), (source["id"], non_analytical, na_ids)
    assert len(specs) == len(final_groups), (source["id"], len(specs))
    for spec, (label, ids) in zip(specs, final_groups):
        assert spec.block_ids == ids, (source["id"], label, spec.block_ids, ids)

    transcript = audit_to_transcript(planner.audit)
    for template_id, replies in source.get("scripted", {}).items():
        transcript.completions.setdefault(template_id, list(replies))

    # Verify: the real mock gateway must reproduce the plan byte for byte.
    check_session = Gateway(LlmConfig(provider="mock"), transcript).session()
    specs2, na2 = segment_report(doc, check_session)
    assert [s.to_json() for s in specs2] == [s.to_json() for s in specs]
    assert na2 == non_analytical

    gold = {
        "report_id": source["id"],
        "boundaries": sorted(predicted_boundaries(specs)),
        "non_analytical": non_analytical,
    }
    return markdown, images, transcript, gold


# --- the reference report for the walkthrough scenario ----------------------------

CHICAGO = {
    "id": "chicago_crime",
    "title": "Chicago crime spikes in 2022, but murders fall for the first time since the pandemic",
    "items": [
        ("para", "Chicago's crime statistics draw national attention, and the debate "
                 "over public safety policy has intensified in recent years.", "na"),
        ("heading", "Overall crime is rising"),
        ("para", "Total reported crime in Chicago rose 41% between 2018 and 2022, "
                 "with most of the increase arriving after 2020.", "g1"),
        ("chart", "images/trend.png", [2668, 2570, 2218, 2664, 3763], "g1"),
        ("para", "Theft and motor vehicle theft drove most of the increase, together "
                 "accounting for the bulk of added incidents in 2022.", "g2"),
        ("chart", "images/types_up.png", [890, 540, 210], "g2"),
        ("heading", "What fell"),
        ("para", "Not every category climbed: burglary and narcotics offenses "
                 "declined steadily across the period.", "g3"),
        ("chart", "images/types_down.png", [300, 190], "g3"),
        ("para", "Between 2021 and 2022 the declining categories kept falling, "
                 "though at a slower pace than before.", "g4"),
        ("chart", "images/recent.png", [120, 90], "g4"),
        ("heading", "Murders buck the trend"),
        ("para", "Homicides fell from 2019 to 2022, the first sustained drop since "
                 "the pandemic began.", "g5"),
        ("chart", "images/homicide.png", [500, 770, 800, 695], "g5"),
        ("para", "Viewed against the longer arc since 2000, homicide totals remain "
                 "well below the peaks of the early 2000s, continuing two decades "
                 "of broad decline.", "g6"),
    ],
    "summaries": {
        "g1": {"objective": "How has the total number of crimes changed annually "
                            "from 2018 to 2022 in Chicago?",
               "depends_on": None, "relation": "elaboration"},
        "g2": {"objective": "Which crime types drove the increase in total crime?",
               "depends_on": 1, "relation": "cause_effect"},
        "g3": {"objective": "Which crime types decreased over the period?",
               "depends_on": 1, "relation": "contrast"},
        "g4": {"objective": "How did the decreasing crime types change in the most "
                            "recent year?",
               "depends_on": 3, "relation": "elaboration"},
        "g5": {"objective": "How has the number of homicides changed from 2019 to "
                            "2022?",
               "depends_on": None, "relation": "elaboration"},
        "g6": {"objective": "How do homicide totals since 2000 compare with recent "
                            "years?",
               "depends_on": 5, "relation": "generalization"},
    },
    "scripted": {
        "rank.infer_fields": [
            "```json\n" + json.dumps({"fields": [
                {"name": "date", "description": "date the crime occurred"},
                {"name": "crime type", "description": "category of the offense"},
            ]}) + "\n```"
        ],
    },
}

INTERNET = {
    "id": "internet_users",
    "title": "Internet users in the UK: 2019",
    "items": [
        ("heading", "Who is online"),
        ("para", "Virtually all adults aged 16 to 44 years were recent internet "
                 "users, while usage among those aged 75 and over remains the "
                 "lowest of any group.", "g1"),
        ("para", "Internet use among retired adults grew faster than any other "
                 "employment group over the last year.", "g2"),
    ],
    "summaries": {
        "g1": {"objective": "How does recent internet use vary across age groups "
                            "in the UK?",
               "depends_on": None, "relation": "elaboration"},
        "g2": {"objective": "How did internet use change across employment groups "
                            "over the last year?",
               "depends_on": 1, "relation": "similarity"},
    },
    "scripted": {
        "rank.infer_fields": [
            "```json\n" + json.dumps({"fields": [
                {"name": "age group", "description": "age bracket of the adult"},
                {"name": "internet use", "description": "whether the person "
                                                        "recently used the internet"},
            ]}) + "\n```"
        ],
    },
}


# --- adapt-stage transcript for the walkthrough -----------------------------------

PNG_HELPER = '''import csv, os, struct, zlib

def _chunk(tag, data):
    return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)

def bar_png(values, path, width=240, height=120):
    vmax = max(list(values) + [1])
    n = max(1, len(values))
    raw = b""
    for y in range(height):
        row = bytearray(b"\\x00")
        for x in range(width):
            i = min(n - 1, x * n // width)
            bar = int(values[i] * (height - 10) / vmax)
            if y >= height - bar and x > i * width // n:
                row += bytes((54, 98, 227))
            else:
                row += bytes((240, 243, 250))
        raw += bytes(row)
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    png = (b"\\x89PNG\\r\\n\\x1a\\n" + _chunk(b"IHDR", ihdr)
           + _chunk(b"IDAT", zlib.compress(raw, 9)) + _chunk(b"IEND", b""))
    with open(path, "wb") as f:
        f.write(png)

rows = list(csv.DictReader(open(os.environ["RESPARK_DATA"], encoding="utf-8")))
'''

SCRIPT_TOTALS = PNG_HELPER + '''
years = ["2020", "2021", "2022", "2023"]
counts = {y: 0 for y in years}
for r in rows:
    counts[r["Date Occ"][:4]] += 1
prev = None
out = []
for y in years:
    change = "" if prev is None else "%+.1f%%" % ((counts[y] - prev) / prev * 100)
    out.append([y, counts[y], change])
    prev = counts[y]
with open("out/table.csv", "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["year", "crimes", "change_pct"])
    w.writerows(out)
bar_png([counts[y] for y in years], "out/chart.png")
'''

TYPE_CHANGE_HELPER = '''
by = {}
for r in rows:
    t = r["Crm Cd Desc"]
    y = r["Date Occ"][:4]
    by.setdefault(t, {})
    by[t][y] = by[t].get(y, 0) + 1
table = sorted(
    ((t, c.get("2020", 0), c.get("2023", 0), c.get("2023", 0) - c.get("2020", 0))
     for t, c in by.items()),
    key=lambda row: (-row[3], row[0]),
)
'''

SCRIPT_TYPES_UP = PNG_HELPER + TYPE_CHANGE_HELPER + '''
with open("out/table.csv", "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["crime_type", "count_2020", "count_2023", "change"])
    w.writerows(table)
bar_png([max(0, row[3]) for row in table], "out/chart.png")
'''

SCRIPT_TYPES_DOWN = PNG_HELPER + TYPE_CHANGE_HELPER + '''
down = sorted((row for row in table if row[3] < 0), key=lambda row: (row[3], row[0]))
with open("out/table.csv", "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["crime_type", "count_2020", "count_2023", "change"])
    w.writerows(down)
bar_png([-row[3] for row in down], "out/chart.png")
'''

SCRIPT_RECENT = PNG_HELPER + TYPE_CHANGE_HELPER + '''
down_types = [row[0] for row in sorted(
    (row for row in table if row[3] < 0), key=lambda row: (row[3], row[0]))]
recent = []
for t in down_types:
    c22 = by[t].get("2022", 0)
    c23 = by[t].get("2023", 0)
    recent.append([t, c22, c23, c23 - c22])
with open("out/table.csv", "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["crime_type", "count_2022", "count_2023", "change"])
    w.writerows(recent)
bar_png([max(row[1], row[2]) for row in recent], "out/chart.png")
'''

SCRIPT_ARSON_TREND = PNG_HELPER + '''
years = ["2020", "2021", "2022", "2023"]
counts = {y: 0 for y in years}
for r in rows:
    if r["Crm Cd Desc"] == "ARSON":
        counts[r["Date Occ"][:4]] += 1
with open("out/table.csv", "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["year", "arson"])
    w.writerows([[y, counts[y]] for y in years])
bar_png([counts[y] for y in years], "out/chart.png")
'''

SCRIPT_ARSON_TIME = PNG_HELPER + '''
parts = ["night", "morning", "afternoon", "evening"]
counts = {p: 0 for p in parts}
for r in rows:
    if r["Crm Cd Desc"] != "ARSON":
        continue
    t = int(r["Time Occ"])
    if t < 600:
        counts["night"] += 1
    elif t < 1200:
        counts["morning"] += 1
    elif t < 1800:
        counts["afternoon"] += 1
    else:
        counts["evening"] += 1
with open("out/table.csv", "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["part_of_day", "arson"])
    w.writerows([[p, counts[p]] for p in parts])
bar_png([counts[p] for p in parts], "out/chart.png")
'''


def fenced_code(script: str) -> str:
    return "Plan: aggregate the rows, then write the table and chart.\n\n```python\n" + script + "\n```"


def fenced_json(payload: dict) -> str:
    return "```json\n" + json.dumps(payload) + "\n```"


def adapted(objective: str, rationale: str, fields: str, dependency: str, scope: str) -> str:
    return fenced_json({
        "result": "adapted",
        "objective": objective,
        "rationale": rationale,
        "dimensions": {
            "data_fields": fields,
            "insight_dependency": dependency,
            "data_scope": scope,
        },
    })


INGEST_REPLY = {
    "dataset_description": (
        "Reported crime incidents in Los Angeles from 2020 to 2023, covering "
        "when and where each incident occurred, the crime category, and the "
        "victim's age."
    ),
    "fields": [
        {"name": "DR_NO", "description": "unique report number for each incident"},
        {"name": "Date Occ", "description": "date the crime occurred"},
        {"name": "Time Occ", "description": "time of occurrence in 24-hour military format"},
        {"name": "AREA", "description": "numeric code of the police area"},
        {"name": "Crm Cd Desc", "description": "description of the crime category"},
        {"name": "Vict Age", "description": "age of the victim in years"},
    ],
}

OBJECTIVE_SEG1 = (
    "How has the total number of crimes changed annually from 2020 to 2023 "
    "in Los Angeles?"
)

CORRECTIONS = [
    adapted(
        OBJECTIVE_SEG1,
        "The annual-trend question transfers directly; only context and time "
        "range needed updating.",
        "Date Occ supports annual counts of incidents",
        "this segment starts directly from the dataset",
        "time range narrowed to the dataset's 2020-2023 coverage and the city "
        "changed to Los Angeles",
    ),
    adapted(
        "Which crime types contributed most to the increase in total crime in "
        "Los Angeles between 2020 and 2023?",
        "The upstream segment again found an overall increase, so the "
        "cause-effect follow-up stays valid.",
        "Crm Cd Desc holds the crime category",
        "the new first segment still shows a rising total, matching the "
        "dependency",
        "years adjusted to 2020-2023",
    ),
    adapted(
        "Which crime types decreased in Los Angeles between 2020 and 2023?",
        "The contrast question applies unchanged to the new categories.",
        "Crm Cd Desc supports per-category counts",
        "contrast with the rising overall trend remains meaningful",
        "years adjusted to 2020-2023",
    ),
    adapted(
        "How did the decreasing crime types change from 2022 to 2023 in Los "
        "Angeles?",
        "The most recent year in the new data is 2023.",
        "Date Occ and Crm Cd Desc support the breakdown",
        "builds on the decreased categories found upstream",
        "most recent year pair is 2022 to 2023 in this dataset",
    ),
    adapted(
        "How has the number of arson incidents changed from 2020 to 2023 in "
        "Los Angeles?",
        "The dataset has no homicide category; arson is the closest "
        "low-frequency crime type available.",
        "no homicide value exists in Crm Cd Desc; arson is suggested as the "
        "alternative field value",
        "this segment starts directly from the dataset",
        "time range narrowed to 2020-2023",
    ),
    fenced_json({
        "result": "none",
        "reason": "data covers 2020–2023 only",
        "rationale": "generalizing the trend back to 2000 needs years outside "
                     "the dataset; an external data source would be required",
        "dimensions": {
            "data_fields": "the required historical counts are not in the dataset",
            "insight_dependency": "the upstream arson trend exists, but the "
                                  "generalization cannot be supported",
            "data_scope": "requested scope (since 2000) exceeds the 2020-2023 "
                          "coverage",
        },
    }),
]

NARRATIVES = [
    "Total reported crime in Los Angeles rose from 11 incidents in 2020 to 16 "
    "in 2023, an increase of about 45%. Year over year, counts moved +9.1% in "
    "2021, +50.0% in 2022, and -11.1% in 2023. The series peaked in 2022 at 18 "
    "incidents before easing in 2023.",
    "Petty theft contributed the most to the rise, adding 4 incidents between "
    "2020 and 2023. Stolen vehicles added 2 incidents, while arson and simple "
    "assault each added 1. Together these increases more than offset the "
    "categories that declined.",
    "Two categories moved against the overall trend: burglary fell from 3 "
    "incidents in 2020 to 1 in 2023, and felony vandalism fell from 2 to 1.",
    "From 2022 to 2023 burglary continued to decline, dropping from 2 "
    "incidents to 1, while felony vandalism ticked back up from 0 to 1.",
    "Arson incidents in Los Angeles rose from 1 in 2020 to a peak of 3 in "
    "2022, then fell back to 2 in 2023. Relative to 2020, the 2023 count is "
    "still higher. Nationally, arson is among the most underreported property "
    "crimes.",
    "Arson incidents cluster outside daylight hours: 4 of the 8 recorded "
    "incidents occurred at night and 3 in the evening, with only 1 in the "
    "afternoon and none in the morning. The concentration matches the small "
    "totals seen in the arson trend.",
]

INSERTED_OBJECTIVE = (
    "What are the trends of arson incidents in Los Angeles based on the time "
    "of day?"
)

REPORT_TITLE = "Crime in Los Angeles rose from 2020 to 2023, led by theft"

SCENARIO_STEPS = [
    {"action": "remove", "segment": "6"},
    {"action": "insert", "fields": ["Time Occ"], "relation": "similarity",
     "anchor": "5"},
    {"action": "regenerate_title"},
]


def build_scenario_transcript(chicago_transcript: Transcript) -> Transcript:
    completions = dict(chicago_transcript.completions)
    completions.update({
        "ingest.summarize": [fenced_json(INGEST_REPLY)],
        "adapt.correct_objective": CORRECTIONS,
        "adapt.codegen": [
            fenced_code(SCRIPT_TOTALS),
            fenced_code(SCRIPT_TYPES_UP),
            fenced_code(SCRIPT_TYPES_DOWN),
            fenced_code(SCRIPT_RECENT),
            fenced_code(SCRIPT_ARSON_TREND),
            fenced_code(SCRIPT_ARSON_TIME),
        ],
        "adapt.insight": NARRATIVES,
        "adapt.flag_nonanalytical": [
            fenced_json({"non_analytical_sentences": []}),
            fenced_json({"non_analytical_sentences": []}),
            fenced_json({"non_analytical_sentences": []}),
            fenced_json({"non_analytical_sentences": []}),
            fenced_json({"non_analytical_sentences": [3]}),
            fenced_json({"non_analytical_sentences": []}),
        ],
        "adapt.insert_objective": [fenced_json({"objective": INSERTED_OBJECTIVE})],
        "organize.title": [fenced_json({"title": REPORT_TITLE})],
    })
    return Transcript(completions=completions, embeddings=build_rank_embeddings())


def build_rank_embeddings() -> dict[str, list[float]]:
    """Vectors for every text the ranking stage embeds.

    Crime-related texts share one axis, internet-related texts the other, so
    the Chicago report cleanly outranks the internet report for the LA
    dataset.
    """
    crime = [1.0, 0.0]
    internet = [0.0, 1.0]
    vectors: dict[str, list[float]] = {}

    topic_text = "LA Crime " + INGEST_REPLY["dataset_description"]
    vectors[topic_text] = crime
    for f in INGEST_REPLY["fields"]:
        vectors[f["name"] + " " + f["description"]] = crime

    chicago_headings = [item[1] for item in CHICAGO["items"] if item[0] == "heading"]
    chicago_objectives = [CHICAGO["summaries"][f"g{i}"]["objective"] for i in range(1, 7)]
    for text in chicago_headings + chicago_objectives:
        vectors[text] = crime
    chicago_fields = json.loads(
        re.search(r"```json\n(.*)\n```", CHICAGO["scripted"]["rank.infer_fields"][0],
                  re.DOTALL).group(1)
    )["fields"]
    for f in chicago_fields:
        vectors[f["name"] + " " + f["description"]] = crime

    internet_headings = [item[1] for item in INTERNET["items"] if item[0] == "heading"]
    internet_objectives = [INTERNET["summaries"][f"g{i}"]["objective"] for i in (1, 2)]
    for text in internet_headings + internet_objectives:
        vectors[text] = internet
    internet_fields = json.loads(
        re.search(r"```json\n(.*)\n```", INTERNET["scripted"]["rank.infer_fields"][0],
                  re.DOTALL).group(1)
    )["fields"]
    for f in internet_fields:
        vectors[f["name"] + " " + f["description"]] = internet
    return vectors


# --- annotated segmentation corpus -------------------------------------------------

def corpus_reports() -> list[dict]:
    return [
        {
            "id": "r01_covid",
            "title": "COVID-19 infection survey, week 32",
            "items": [
                ("heading", "Infections"),
                ("para", "The estimated share of people testing positive rose to 1 "
                         "in 65 during the week.", "g1"),
                ("chart", "r01_positivity.png", [40, 52, 65], "g1"),
                ("para", "Positivity among school-age children nearly doubled week "
                         "on week.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How did the overall positivity rate change "
                                    "during the week?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "How did positivity change among school-age "
                                    "children?",
                       "depends_on": 1, "relation": "elaboration"},
            },
        },
        {
            "id": "r02_housing",
            "title": "UK house price index: March",
            "items": [
                ("heading", "Prices"),
                ("para", "House price data in this bulletin comes from the land "
                         "registry's completed transactions.", "na"),
                ("para", "Average prices rose 4.3% over the year to March.", "g1"),
                ("chart", "r02_prices.png", [210, 219], "g1"),
                ("para", "London saw the slowest annual growth of any region.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How did average house prices change over the "
                                    "year?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "Which region grew slowest compared with the "
                                    "national average?",
                       "depends_on": 1, "relation": "contrast"},
            },
        },
        {
            "id": "r03_education",
            "title": "School workforce and class sizes",
            "items": [
                ("para", "Primary school class sizes grew for the third "
                         "consecutive year.", "g1"),
                ("chart", "r03_classes.png", [26, 27, 28], "g1"),
                ("heading", "Teachers"),
                ("para", "Teacher vacancies rose fastest in science subjects.", "g2"),
                ("para", "Within science, vacancy rates doubled in physics.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How have primary class sizes changed over "
                                    "recent years?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "Which subjects have the fastest-growing "
                                    "teacher vacancies?",
                       "depends_on": 1, "relation": "similarity"},
            },
        },
        {
            "id": "r04_elections",
            "title": "How Britain voted: turnout and swing",
            "items": [
                ("heading", "Turnout"),
                ("para", "Turnout rose two points to 68%, the highest in two "
                         "decades.", "g1"),
                ("para", "The increase was concentrated among voters under 35.",
                 "g2"),
                ("para", "Older voters, by contrast, turned out at the same rate "
                         "as last time.", "g3"),
                ("para", "In short: turnout up, driven by the young, with older "
                         "groups flat.", "na"),
            ],
            "summaries": {
                "g1": {"objective": "How did overall turnout change at this "
                                    "election?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "Which age groups drove the turnout "
                                    "increase?",
                       "depends_on": 1, "relation": "cause_effect"},
                "g3": {"objective": "How did turnout among older voters compare?",
                       "depends_on": 2, "relation": "contrast"},
            },
        },
        {
            "id": "r05_transport",
            "title": "Rail passenger volumes recover",
            "items": [
                ("para", "Quarterly rail journeys climbed back to 92% of their "
                         "pre-pandemic level.", "g1"),
                ("chart", "r05_rail.png", [60, 75, 92], "g1"),
                ("para", "The chart shows the recovery stalling in the final "
                         "quarter.", "g1"),
                ("para", "Season-ticket journeys remain far below 2019 levels.",
                 "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How far have rail journeys recovered toward "
                                    "pre-pandemic volumes?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "How do season-ticket journeys compare with "
                                    "2019?",
                       "depends_on": 1, "relation": "contrast"},
            },
        },
        {
            "id": "r06_energy",
            "title": "Electricity generation mix, Q2",
            "items": [
                ("heading", "Generation"),
                ("chart", "r06_mix.png", [35, 28, 22, 15], "g1"),
                ("para", "Gas-fired output fell to its lowest second-quarter share "
                         "on record.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "What was the generation mix in the second "
                                    "quarter?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "How did the gas share change relative to "
                                    "earlier years?",
                       "depends_on": 1, "relation": "temporal"},
            },
        },
        {
            "id": "r07_employment",
            "title": "Labour market overview",
            "items": [
                ("heading", "Employment"),
                ("para", "The employment rate held at 75.7%, unchanged on the "
                         "quarter.", "g1"),
                ("para", "Vacancies fell for the ninth consecutive period.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How did the employment rate move this "
                                    "quarter?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "What is the trend in vacancies?",
                       "depends_on": 1, "relation": "temporal"},
            },
        },
        {
            "id": "r08_tourism",
            "title": "Overseas visitors to the UK",
            "items": [
                ("heading", "Visits"),
                ("para", "Overseas residents made 8.2 million visits in the "
                         "quarter, up 12% on last year.", "g1"),
                ("chart", "r08_visits.png", [62, 73, 82], "g1"),
                ("para", "Visit numbers are compiled from the international "
                         "passenger survey.", "na"),
                ("para", "Spending per visit fell slightly after adjusting for "
                         "inflation.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How did overseas visits change compared with "
                                    "last year?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "How did spending per visit move in real "
                                    "terms?",
                       "depends_on": 1, "relation": "contrast"},
            },
        },
        {
            "id": "r09_obesity",
            "title": "Adult obesity and activity levels",
            "items": [
                ("para", "The share of adults classed as obese edged up to 26%.",
                 "g1"),
                ("chart", "r09_obesity.png", [24, 25, 26], "g1"),
                ("para", "Falling activity levels explain much of the rise.", "g2"),
                ("chart", "r09_activity.png", [61, 58, 55], "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How has the adult obesity rate changed?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "What role do activity levels play in the "
                                    "obesity rise?",
                       "depends_on": 1, "relation": "cause_effect"},
            },
        },
        {
            "id": "r10_broadband",
            "title": "Broadband coverage and speeds",
            "items": [
                ("heading", "Coverage"),
                ("para", "Full-fibre coverage reached 57% of premises, up from "
                         "42% a year earlier.", "g1"),
                ("heading", "Speeds"),
                ("para", "Median download speeds rose by a quarter, led by urban "
                         "areas.", "g2"),
            ],
            "summaries": {
                "g1": {"objective": "How much has full-fibre coverage grown over "
                                    "the year?",
                       "depends_on": None, "relation": "elaboration"},
                "g2": {"objective": "How did median download speeds change?",
                       "depends_on": 1, "relation": "similarity"},
            },
        },
    ]


# --- main --------------------------------------------------------------------------

def write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        path.write_text(data, encoding="utf-8")
    else:
        path.write_bytes(data)


def transcript_json(transcript: Transcript) -> str:
    return json.dumps(transcript.to_json(), ensure_ascii=False, indent=2,
                      sort_keys=True) + "\n"


def main() -> None:
    write(FIXTURES / "la_crime.csv", build_la_crime_csv())

    # walkthrough reference report + scenario transcript
    markdown, images, chicago_transcript, _ = plan_report_transcript(CHICAGO)
    write(FIXTURES / "chicago_report" / "report.md", markdown)
    for rel, data in images.items():
        write(FIXTURES / "chicago_report" / rel, data)
    scenario = build_scenario_transcript(chicago_transcript)
    write(FIXTURES / "transcripts" / "scenario_la.json", transcript_json(scenario))
    write(
        FIXTURES / "scenario_la_steps.json",
        json.dumps(SCENARIO_STEPS, indent=2) + "\n",
    )

    # second repository report for ranking
    markdown, images, internet_transcript, _ = plan_report_transcript(INTERNET)
    write(FIXTURES / "reports" / "internet_users.md", markdown)
    write(
        FIXTURES / "transcripts" / "internet_report.json",
        transcript_json(internet_transcript),
    )

    # annotated segmentation corpus
    for source in corpus_reports():
        markdown, images, transcript, gold = plan_report_transcript(source)
        write(FIXTURES / "seg_corpus" / "reports" / f"{source['id']}.md", markdown)
        for rel, data in images.items():
            write(FIXTURES / "seg_corpus" / "reports" / rel, data)
        write(
            FIXTURES / "seg_corpus" / "transcripts" / f"{source['id']}.json",
            transcript_json(transcript),
        )
        write(
            FIXTURES / "seg_corpus" / "gold" / f"{source['id']}.json",
            json.dumps(gold, indent=2) + "\n",
        )

    table = load_table(build_la_crime_csv().encode(), "LA Crime")
    profiles = profile_table(table)
    print(f"dataset: {table.row_count} rows, {len(profiles)} fields")
    print("fixtures written under", FIXTURES)


if __name__ == "__main__":
    main()

