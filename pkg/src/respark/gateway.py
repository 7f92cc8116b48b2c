"""Uniform access to chat-completion and embedding providers.

Two providers exist. The live one talks to an OpenAI-compatible endpoint
with retry on transient failures. The mock one answers from a transcript
keyed by (template id, invocation ordinal), which makes the whole pipeline
a pure function of its inputs plus the transcript: ideal for offline tests
and byte-exact replays. Every request/response pair lands in a session
audit log, and replaying that log as a transcript reproduces the session.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import jsonschema

from .config import LlmConfig
from .errors import LlmError, MalformedLlmOutput, MissingTranscript
from .prompts import SCHEMAS, get_template

EMBEDDING_DIM = 8  # dimension of the deterministic fallback embeddings


def hash_embedding(text: str, dim: int = EMBEDDING_DIM) -> list[float]:
    """Deterministic pseudo-embedding derived from sha256 of the text.

    Identical texts map to identical unit vectors, so cosine similarity is 1
    exactly for equal strings and incoherent-but-stable for different ones.
    Used by the mock provider when the transcript does not script a vector.
    """
    values: list[float] = []
    counter = 0
    while len(values) < dim:
        digest = hashlib.sha256(text.encode("utf-8") + counter.to_bytes(2, "big")).digest()
        for i in range(0, len(digest) - 3, 4):
            if len(values) >= dim:
                break
            chunk = int.from_bytes(digest[i:i + 4], "big")
            values.append(chunk / 2**31 - 1.0)
        counter += 1
    norm = math.sqrt(sum(v * v for v in values))
    if norm < 1e-12:
        values[0] = 1.0
        norm = 1.0
    return [v / norm for v in values]


@dataclass
class Transcript:
    """Scripted mock responses.

    ``completions`` maps template id to the replies in invocation order;
    ``embeddings`` maps exact text to its vector. Texts without a scripted
    vector fall back to :func:`hash_embedding`.
    """

    completions: dict[str, list[str]] = field(default_factory=dict)
    embeddings: dict[str, list[float]] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> Transcript:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            completions=data.get("completions", {}),
            embeddings=data.get("embeddings", {}),
        )

    def to_json(self) -> dict:
        return {"completions": self.completions, "embeddings": self.embeddings}


@dataclass
class AuditRecord:
    kind: str                          # "complete" | "embed"
    template_id: str = ""
    ordinal: int = -1
    prompt: str = ""
    response: str = ""
    texts: list[str] = field(default_factory=list)
    vectors: list[list[float]] = field(default_factory=list)

    def to_json(self) -> dict:
        if self.kind == "complete":
            return {
                "kind": self.kind,
                "template_id": self.template_id,
                "ordinal": self.ordinal,
                "prompt": self.prompt,
                "response": self.response,
            }
        return {"kind": self.kind, "texts": self.texts, "vectors": self.vectors}

    @classmethod
    def from_json(cls, data: dict) -> AuditRecord:
        if data["kind"] == "complete":
            return cls(
                kind="complete",
                template_id=data["template_id"],
                ordinal=data["ordinal"],
                prompt=data.get("prompt", ""),
                response=data["response"],
            )
        return cls(kind="embed", texts=data["texts"], vectors=data["vectors"])


def audit_to_transcript(records: list[AuditRecord]) -> Transcript:
    """Fold an audit log back into a transcript that replays the session."""
    completions: dict[str, list[str]] = {}
    embeddings: dict[str, list[float]] = {}
    ordered: dict[str, list[tuple[int, str]]] = {}
    for record in records:
        if record.kind == "complete":
            ordered.setdefault(record.template_id, []).append(
                (record.ordinal, record.response)
            )
        else:
            for text, vector in zip(record.texts, record.vectors):
                embeddings[text] = vector
    for template_id, pairs in ordered.items():
        pairs.sort(key=lambda p: p[0])
        completions[template_id] = [response for _, response in pairs]
    return Transcript(completions=completions, embeddings=embeddings)


class MockProvider:
    def __init__(self, transcript: Transcript):
        self.transcript = transcript

    def complete_text(self, prompt: str, template_id: str, ordinal: int) -> str:
        replies = self.transcript.completions.get(template_id)
        if replies is None or ordinal >= len(replies):
            raise MissingTranscript(
                f"no scripted reply for ({template_id!r}, ordinal {ordinal})"
            )
        return replies[ordinal]

    def embed_texts(self, texts: list[str], model: str) -> list[list[float]]:
        scripted = [self.transcript.embeddings.get(t) for t in texts]
        dims = {len(v) for v in scripted if v is not None}
        dim = dims.pop() if len(dims) == 1 else EMBEDDING_DIM
        return [
            list(v) if v is not None else hash_embedding(t, dim)
            for v, t in zip(scripted, texts)
        ]


class LiveProvider:
    """OpenAI-compatible chat/embeddings client with transient-failure retry."""

    def __init__(self, config: LlmConfig):
        import httpx

        self.config = config
        api_key = os.environ.get(config.api_key_env, "")
        if not api_key:
            raise LlmError(
                f"live provider selected but {config.api_key_env} is not set"
            )
        self._client = httpx.Client(
            base_url=config.base_url,
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=config.timeout_s,
        )

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = self._client.post(path, json=payload)
                if response.status_code in (429, 500, 502, 503, 504):
                    last_error = LlmError(f"HTTP {response.status_code}: {response.text[:200]}")
                else:
                    response.raise_for_status()
                    return response.json()
            except httpx.HTTPError as exc:
                last_error = exc
            if attempt < self.config.max_retries:
                time.sleep(min(2.0 * (attempt + 1), 10.0))
        raise LlmError(f"provider request failed after retries: {last_error}")

    def complete_text(self, prompt: str, template_id: str, ordinal: int) -> str:
        data = self._post(
            "/chat/completions",
            {
                "model": self.config.model,
                "temperature": 0,
                "messages": [{"role": "user", "content": prompt}],
            },
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError) as exc:
            raise LlmError(f"unexpected completion payload: {exc}") from exc

    def embed_texts(self, texts: list[str], model: str) -> list[list[float]]:
        data = self._post("/embeddings", {"model": model, "input": texts})
        try:
            items = sorted(data["data"], key=lambda d: d["index"])
            return [item["embedding"] for item in items]
        except (KeyError, TypeError) as exc:
            raise LlmError(f"unexpected embedding payload: {exc}") from exc


_FENCED_JSON = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_json_block(text: str) -> dict:
    match = _FENCED_JSON.search(text)
    candidate = match.group(1) if match else text
    try:
        parsed = json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise MalformedLlmOutput(f"reply is not valid JSON: {exc}") from exc
    if not isinstance(parsed, dict):
        raise MalformedLlmOutput("reply JSON must be an object")
    return parsed


def extract_code_block(text: str) -> str:
    """Pull the last fenced code block out of a reply (plan text precedes it)."""
    blocks = re.findall(r"```[a-zA-Z0-9_+-]*\s*\n(.*?)```", text, re.DOTALL)
    if blocks:
        return blocks[-1].strip("\n")
    return text.strip()


class Gateway:
    """Provider factory; create one :class:`GatewaySession` per logical run."""

    def __init__(self, config: LlmConfig, transcript: Transcript | None = None):
        self.config = config
        if config.provider == "mock":
            self.provider = MockProvider(transcript or Transcript())
        elif config.provider == "live":
            self.provider = LiveProvider(config)
        else:
            raise ValueError(f"unknown provider: {config.provider!r}")

    def session(
        self,
        counters: dict[str, int] | None = None,
        audit: list[AuditRecord] | None = None,
    ) -> GatewaySession:
        return GatewaySession(self, counters=counters, audit=audit)


class GatewaySession:
    """Ordinal-tracking view of the gateway for one logical run.

    Invocation ordinals increase per template id over the session lifetime;
    the mock provider keys its transcript on them, so request ordering must
    be preserved. Not safe for concurrent use by design.
    """

    def __init__(
        self,
        gateway: Gateway,
        counters: dict[str, int] | None = None,
        audit: list[AuditRecord] | None = None,
    ):
        self.gateway = gateway
        self.counters: dict[str, int] = counters if counters is not None else {}
        self.audit: list[AuditRecord] = audit if audit is not None else []

    def _next_ordinal(self, template_id: str) -> int:
        ordinal = self.counters.get(template_id, 0)
        self.counters[template_id] = ordinal + 1
        return ordinal

    def _call(self, template_id: str, prompt: str) -> str:
        ordinal = self._next_ordinal(template_id)
        response = self.gateway.provider.complete_text(prompt, template_id, ordinal)
        self.audit.append(
            AuditRecord(
                kind="complete",
                template_id=template_id,
                ordinal=ordinal,
                prompt=prompt,
                response=response,
            )
        )
        return response

    def render(self, template_id: str, bindings: dict) -> str:
        template = get_template(template_id)
        try:
            return template.body.format(**bindings)
        except KeyError as exc:
            raise ValueError(
                f"template {template_id!r}: unbound placeholder {exc}"
            ) from exc

    def complete(self, template_id: str, bindings: dict) -> str:
        """Free-text completion."""
        return self._call(template_id, self.render(template_id, bindings))

    def complete_structured(
        self,
        template_id: str,
        bindings: dict,
        check: Callable[[dict], None] | None = None,
    ) -> dict:
        """Completion validated against the template's schema.

        On a schema (or semantic ``check``) failure the model is re-prompted
        with the validation error embedded, up to the configured retry
        budget. Each re-prompt consumes the template's next ordinal.
        """
        template = get_template(template_id)
        if template.schema is None:
            raise ValueError(f"template {template_id!r} has no output schema")
        schema = SCHEMAS[template.schema]
        prompt = self.render(template_id, bindings)
        failure = ""
        for _ in range(self.gateway.config.max_retries + 1):
            attempt_prompt = prompt if not failure else (
                prompt
                + "\n\nYour previous reply was invalid: "
                + failure
                + "\nReply again with a valid fenced JSON block."
            )
            text = self._call(template_id, attempt_prompt)
            try:
                payload = extract_json_block(text)
                jsonschema.validate(payload, schema)
                if check is not None:
                    check(payload)
                return payload
            except (MalformedLlmOutput, jsonschema.ValidationError) as exc:
                failure = str(exc).splitlines()[0]
        raise MalformedLlmOutput(
            f"template {template_id!r}: no valid structured reply "
            f"after {self.gateway.config.max_retries + 1} attempt(s); last error: {failure}"
        )

    def embed(self, texts: list[str]) -> list[list[float]]:
        """Embed texts; all returned vectors share one dimension."""
        if not texts:
            return []
        vectors = self.gateway.provider.embed_texts(
            list(texts), self.gateway.config.embedding_model
        )
        dims = {len(v) for v in vectors}
        if len(dims) != 1:
            raise LlmError(f"provider returned mixed embedding dimensions: {sorted(dims)}")
        self.audit.append(AuditRecord(kind="embed", texts=list(texts), vectors=vectors))
        return vectors
