"""Small shared helpers: canonical JSON, hashing, sentence splitting."""

from __future__ import annotations

import hashlib
import json
import re
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize to the canonical byte form used for fixtures and stores.

    Sorted keys, two-space indent, UTF-8 text, trailing newline. Every
    artifact the pipeline persists goes through this so that replays are
    byte-identical.
    """
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def short_id(prefix: str, data: bytes) -> str:
    """Deterministic content-derived identifier, e.g. ``ds-3fa9c02b1d77``."""
    return f"{prefix}-{content_hash(data)[:12]}"


_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Return (start, end) character spans of sentences in reading order.

    Splits on whitespace following ``.``, ``!`` or ``?``. Spans cover the
    sentence text without surrounding whitespace and never overlap.
    """
    spans: list[tuple[int, int]] = []
    start = 0
    for match in _SENTENCE_BREAK.finditer(text):
        spans.append((start, match.start()))
        start = match.end()
    if start < len(text):
        end = len(text.rstrip())
        if end > start:
            spans.append((start, end))
    return spans


def word_boundary_pattern(name: str) -> re.Pattern[str]:
    """Case-insensitive exact-name matcher that respects word boundaries.

    Works for names containing spaces or punctuation ("Time Occ", "Crm Cd"):
    the characters adjacent to the match must not be word characters.
    """
    return re.compile(
        r"(?<![0-9A-Za-z_])" + re.escape(name) + r"(?![0-9A-Za-z_])",
        re.IGNORECASE,
    )
