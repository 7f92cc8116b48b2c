"""Store persistence: content addressing, restart survival, crash safety."""

from __future__ import annotations

import json

from respark.store import Store


def test_blob_round_trip(tmp_path):
    store = Store(tmp_path / "s")
    rel = store.put_blob(b"hello", ".bin")
    assert store.blob_path(rel).read_bytes() == b"hello"
    # identical content maps to the same object
    assert store.put_blob(b"hello", ".bin") == rel


def test_dataset_and_report_survive_restart(tmp_path):
    store = Store(tmp_path / "s")
    dataset_id = store.add_dataset(b"a,b\n1,2\n", "demo", {"row_count": 1})
    report_id = store.add_report(
        {"title": "t", "blocks": []}, {"img.png": b"\x89PNG fake"},
        [{"objective": "o"}], [0], {"title": "t"},
    )

    again = Store(tmp_path / "s")
    assert again.has_dataset(dataset_id)
    assert again.dataset_summary(dataset_id) == {"row_count": 1}
    assert again.dataset_csv_path(dataset_id).read_bytes() == b"a,b\n1,2\n"
    assert again.has_report(report_id)
    assert again.report_doc(report_id)["title"] == "t"
    assert again.report_asset_path(report_id, "img.png").read_bytes() == b"\x89PNG fake"


def test_session_ids_sequential(tmp_path):
    store = Store(tmp_path / "s")
    assert store.new_session_id() == "sess-1"
    assert store.new_session_id() == "sess-2"
    store.flush()
    again = Store(tmp_path / "s")
    assert again.new_session_id() == "sess-3"


def test_dataset_id_content_derived(tmp_path):
    a = Store(tmp_path / "a").add_dataset(b"x,y\n1,2\n", "n", {})
    b = Store(tmp_path / "b").add_dataset(b"x,y\n1,2\n", "n", {})
    assert a == b


def test_crash_between_write_and_rename_leaves_store_intact(tmp_path):
    store = Store(tmp_path / "s")
    store.add_dataset(b"a\n1\n", "demo", {"row_count": 1})
    # a crash mid-write leaves only the temporary file behind
    (tmp_path / "s" / "manifest.json.tmp").write_text("{ garbage", encoding="utf-8")

    again = Store(tmp_path / "s")
    assert again.dataset_ids()
    assert json.loads((tmp_path / "s" / "manifest.json").read_text())["datasets"]


def test_save_session_overwrites_pointer(tmp_path):
    store = Store(tmp_path / "s")
    sid = store.new_session_id()
    store.save_session(sid, {"v": 1})
    store.save_session(sid, {"v": 2})
    assert store.load_session(sid) == {"v": 2}
