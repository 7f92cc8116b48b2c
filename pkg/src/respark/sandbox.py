"""Isolated execution of generated transformation scripts.

Scripts never run in the service process. Each attempt gets a fresh work
directory with a private copy of the dataset; the script finds the dataset
path in the ``RESPARK_DATA`` environment variable and must write
``out/table.csv`` and ``out/chart.png``. Containment is a subprocess with a
scrubbed environment and wall-clock limit; OS-level sandboxing beyond that
is a deployment concern.
"""

from __future__ import annotations

import csv
import io
import shlex
import shutil
import subprocess
import sys
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from threading import BoundedSemaphore

from .config import SandboxConfig
from .errors import SandboxUnavailable
from .model import SmallTable

OUTPUT_TABLE = "out/table.csv"
OUTPUT_CHART = "out/chart.png"
STDERR_EXCERPT_BYTES = 4096

# Text embedded in code-generation prompts so the model writes scripts that
# satisfy the execution contract.
CONTRACT_TEXT = (
    "The dataset CSV path is in the environment variable RESPARK_DATA.\n"
    f"The script must write the transformed table to {OUTPUT_TABLE} (CSV with "
    f"a header row) and the chart image to {OUTPUT_CHART} (PNG).\n"
    "The script is executed with Python in a fresh working directory; the "
    "'out' directory already exists. Matplotlib, numpy and pandas are "
    "available; use the Agg backend (it is preconfigured)."
)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8"


class ExecutionStatus(Enum):
    SUCCESS = "success"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    OUTPUT_MISSING = "output_missing"


@dataclass
class ExecutionRequest:
    script: str
    dataset_path: Path
    workdir: Path
    timeout_s: float = 60.0
    max_output_bytes: int = 16 * 1024 * 1024


@dataclass
class ExecutionResult:
    status: ExecutionStatus
    transformed_table: SmallTable | None = None
    chart_path: Path | None = None
    stderr_excerpt: str = ""
    duration_s: float = 0.0
    workdir: Path | None = None

    @property
    def ok(self) -> bool:
        return self.status == ExecutionStatus.SUCCESS


def _load_output_table(path: Path) -> SmallTable | None:
    try:
        text = path.read_text(encoding="utf-8")
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
    except (OSError, UnicodeDecodeError, csv.Error):
        return None
    if not rows:
        return None
    header = rows[0]
    if any(len(r) != len(header) for r in rows[1:]):
        return None
    return SmallTable(columns=header, rows=rows[1:])


def _chart_readable(path: Path) -> bool:
    try:
        head = path.read_bytes()[:8]
    except OSError:
        return False
    return head.startswith(_PNG_MAGIC) or head.startswith(_JPEG_MAGIC)


@dataclass
class SandboxRunner:
    """Runs scripts under the configured command with a bounded pool."""

    config: SandboxConfig = field(default_factory=SandboxConfig)
    base_dir: Path | None = None

    def __post_init__(self):
        self._pool = BoundedSemaphore(max(1, self.config.max_parallel))

    def new_workdir(self) -> Path:
        base = self.base_dir or Path.cwd() / "sandbox-runs"
        workdir = base / uuid.uuid4().hex
        workdir.mkdir(parents=True, exist_ok=False)
        return workdir

    def _command(self, script_path: Path) -> list[str]:
        if self.config.command:
            return shlex.split(self.config.command.format(script=str(script_path)))
        return [sys.executable, str(script_path)]

    def run(self, request: ExecutionRequest) -> ExecutionResult:
        """Execute one script attempt inside its own work directory."""
        workdir = request.workdir
        workdir.mkdir(parents=True, exist_ok=True)
        script_path = workdir / "script.py"
        script_path.write_text(request.script, encoding="utf-8")
        # Private copy so no execution can touch the source dataset file.
        data_copy = workdir / "data.csv"
        shutil.copyfile(request.dataset_path, data_copy)
        (workdir / "out").mkdir(exist_ok=True)

        env = {
            "PATH": "/usr/local/bin:/usr/bin:/bin",
            "HOME": str(workdir),
            "TMPDIR": str(workdir),
            "LANG": "C.UTF-8",
            "PYTHONDONTWRITEBYTECODE": "1",
            "RESPARK_DATA": str(data_copy),
            "MPLBACKEND": "Agg",
            "MPLCONFIGDIR": str(workdir / ".mpl"),
        }
        if not self.config.allow_network:
            env["RESPARK_NO_NETWORK"] = "1"

        started = time.monotonic()
        with self._pool:
            try:
                proc = subprocess.run(
                    self._command(script_path),
                    cwd=workdir,
                    env=env,
                    capture_output=True,
                    timeout=request.timeout_s,
                )
            except FileNotFoundError as exc:
                raise SandboxUnavailable(f"sandbox command not found: {exc}") from exc
            except subprocess.TimeoutExpired:
                return ExecutionResult(
                    status=ExecutionStatus.TIMEOUT,
                    stderr_excerpt=f"wall-clock limit of {request.timeout_s}s exceeded",
                    duration_s=time.monotonic() - started,
                    workdir=workdir,
                )
        duration = time.monotonic() - started
        stderr = proc.stderr.decode("utf-8", errors="replace")
        # Scrub the ephemeral workdir from tracebacks so retry prompts and
        # attempt logs are byte-identical across replays.
        stderr = stderr.replace(str(workdir), "<workdir>")[-STDERR_EXCERPT_BYTES:]

        if proc.returncode != 0:
            return ExecutionResult(
                status=ExecutionStatus.RUNTIME_ERROR,
                stderr_excerpt=stderr,
                duration_s=duration,
                workdir=workdir,
            )

        table_path = workdir / OUTPUT_TABLE
        chart_path = workdir / OUTPUT_CHART
        problems: list[str] = []
        table: SmallTable | None = None
        if not table_path.is_file():
            problems.append(f"{OUTPUT_TABLE} was not written")
        elif table_path.stat().st_size > request.max_output_bytes:
            problems.append(
                f"{OUTPUT_TABLE} exceeds the {request.max_output_bytes} byte limit"
            )
        else:
            table = _load_output_table(table_path)
            if table is None:
                problems.append(f"{OUTPUT_TABLE} is not parseable CSV")
        if not chart_path.is_file():
            problems.append(f"{OUTPUT_CHART} was not written")
        elif not _chart_readable(chart_path):
            problems.append(f"{OUTPUT_CHART} is not a readable image")

        if problems:
            return ExecutionResult(
                status=ExecutionStatus.OUTPUT_MISSING,
                stderr_excerpt="; ".join(problems),
                duration_s=duration,
                workdir=workdir,
            )
        return ExecutionResult(
            status=ExecutionStatus.SUCCESS,
            transformed_table=table,
            chart_path=chart_path,
            stderr_excerpt=stderr,
            duration_s=duration,
            workdir=workdir,
        )

    def run_fresh(self, script: str, dataset_path: Path) -> ExecutionResult:
        """Convenience wrapper: fresh workdir plus configured limits."""
        return self.run(
            ExecutionRequest(
                script=script,
                dataset_path=Path(dataset_path),
                workdir=self.new_workdir(),
                timeout_s=self.config.timeout_s,
                max_output_bytes=self.config.max_output_bytes,
            )
        )
