"""Content-addressed file store with a single manifest per directory.

No external database: blobs (CSV files, chart images, report assets) live
under ``objects/`` named by content hash, structured records are canonical
JSON, and one manifest ties everything together. Every write goes to a
temporary file first and is renamed into place, so a crash between persist
and respond never leaves a corrupt store.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .util import canonical_json, content_hash, short_id

_EMPTY_MANIFEST = {
    "datasets": {},
    "reports": {},
    "sessions": {},
    "next_session": 1,
}


class Store:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.objects = self.path / "objects"
        self.path.mkdir(parents=True, exist_ok=True)
        self.objects.mkdir(exist_ok=True)
        self._manifest_path = self.path / "manifest.json"
        if self._manifest_path.is_file():
            self.manifest = json.loads(self._manifest_path.read_text(encoding="utf-8"))
        else:
            self.manifest = json.loads(json.dumps(_EMPTY_MANIFEST))

    # -- low-level ------------------------------------------------------------

    def _atomic_write(self, path: Path, data: bytes) -> None:
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)

    def flush(self) -> None:
        self._atomic_write(
            self._manifest_path, canonical_json(self.manifest).encode("utf-8")
        )

    def put_blob(self, data: bytes, suffix: str) -> str:
        """Store bytes content-addressed; returns the store-relative path."""
        rel = f"objects/{content_hash(data)[:24]}{suffix}"
        target = self.path / rel
        if not target.is_file():
            self._atomic_write(target, data)
        return rel

    def blob_path(self, rel: str) -> Path:
        return self.path / rel

    def put_json(self, obj: dict) -> str:
        return self.put_blob(canonical_json(obj).encode("utf-8"), ".json")

    def get_json(self, rel: str) -> dict:
        return json.loads(self.blob_path(rel).read_text(encoding="utf-8"))

    # -- datasets ---------------------------------------------------------------

    def add_dataset(self, csv_bytes: bytes, name: str, summary: dict) -> str:
        dataset_id = short_id("ds", csv_bytes)
        self.manifest["datasets"][dataset_id] = {
            "name": name,
            "csv": self.put_blob(csv_bytes, ".csv"),
            "summary": self.put_json(summary),
        }
        self.flush()
        return dataset_id

    def has_dataset(self, dataset_id: str) -> bool:
        return dataset_id in self.manifest["datasets"]

    def dataset_ids(self) -> list[str]:
        return sorted(self.manifest["datasets"])

    def dataset_summary(self, dataset_id: str) -> dict:
        return self.get_json(self.manifest["datasets"][dataset_id]["summary"])

    def dataset_csv_path(self, dataset_id: str) -> Path:
        return self.blob_path(self.manifest["datasets"][dataset_id]["csv"])

    # -- reports ----------------------------------------------------------------

    def add_report(
        self,
        doc: dict,
        assets: dict[str, bytes],
        segments: list[dict],
        non_analytical: list[int],
        index_entry: dict,
    ) -> str:
        doc_bytes = canonical_json(doc).encode("utf-8")
        report_id = short_id("rep", doc_bytes)
        self.manifest["reports"][report_id] = {
            "doc": self.put_blob(doc_bytes, ".json"),
            "assets": {
                rel: self.put_blob(data, Path(rel).suffix or ".bin")
                for rel, data in sorted(assets.items())
            },
            "segments": self.put_json(
                {"segments": segments, "non_analytical": non_analytical}
            ),
            "index": self.put_json(index_entry),
        }
        self.flush()
        return report_id

    def has_report(self, report_id: str) -> bool:
        return report_id in self.manifest["reports"]

    def report_ids(self) -> list[str]:
        return sorted(self.manifest["reports"])

    def report_doc(self, report_id: str) -> dict:
        return self.get_json(self.manifest["reports"][report_id]["doc"])

    def report_segments(self, report_id: str) -> tuple[list[dict], list[int]]:
        data = self.get_json(self.manifest["reports"][report_id]["segments"])
        return data["segments"], data["non_analytical"]

    def report_index(self, report_id: str) -> dict:
        return self.get_json(self.manifest["reports"][report_id]["index"])

    def update_report_index(self, report_id: str, index_entry: dict) -> None:
        self.manifest["reports"][report_id]["index"] = self.put_json(index_entry)
        self.flush()

    def report_asset_path(self, report_id: str, rel: str) -> Path | None:
        assets = self.manifest["reports"][report_id]["assets"]
        if rel not in assets:
            return None
        return self.blob_path(assets[rel])

    def report_assets(self, report_id: str) -> dict[str, Path]:
        assets = self.manifest["reports"][report_id]["assets"]
        return {rel: self.blob_path(obj) for rel, obj in assets.items()}

    # -- sessions -----------------------------------------------------------------

    def new_session_id(self) -> str:
        n = self.manifest["next_session"]
        self.manifest["next_session"] = n + 1
        return f"sess-{n}"

    def save_session(self, session_id: str, state: dict) -> None:
        self.manifest["sessions"][session_id] = self.put_json(state)
        self.flush()

    def has_session(self, session_id: str) -> bool:
        return session_id in self.manifest["sessions"]

    def session_ids(self) -> list[str]:
        return sorted(self.manifest["sessions"])

    def load_session(self, session_id: str) -> dict:
        return self.get_json(self.manifest["sessions"][session_id])
