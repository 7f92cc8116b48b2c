"""Freeze the golden export for the bundled walkthrough scenario.

Runs the real CLI (ingest, segment, generate with the recorded user
actions) against the bundled transcript into a scratch directory, then
copies the export into fixtures/golden/. Run after make_fixtures.py
whenever fixtures change:

    python3 tools/freeze_golden.py
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
GOLDEN = FIXTURES / "golden"
TRANSCRIPT = FIXTURES / "transcripts" / "scenario_la.json"


def cli(store: Path, *args: str) -> dict:
    out = subprocess.run(
        [sys.executable, "-m", "respark.cli", "--store", str(store),
         "--mock", str(TRANSCRIPT), "--json", *args],
        cwd=ROOT, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        store = Path(tmp) / "store"
        out_dir = Path(tmp) / "out"
        dataset = cli(store, "ingest", str(FIXTURES / "la_crime.csv"),
                      "--name", "LA Crime")["dataset_id"]
        report = cli(store, "segment",
                     str(FIXTURES / "chicago_report" / "report.md"))["report_id"]
        cli(store, "generate", dataset, report, "--out", str(out_dir),
            "--scenario", str(FIXTURES / "scenario_la_steps.json"))
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        GOLDEN.mkdir(parents=True)
        for name in ("report.md", "report.html"):
            shutil.copyfile(out_dir / name, GOLDEN / name)
        shutil.copytree(out_dir / "assets", GOLDEN / "assets")
    print("golden export frozen under", GOLDEN)


if __name__ == "__main__":
    main()
