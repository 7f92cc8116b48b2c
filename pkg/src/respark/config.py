"""Configuration loading.

Settings live in a TOML file (``respark.toml`` by convention) with the
sections ``llm``, ``sandbox``, ``adapt``, ``ranking``, ``ingest``, ``store``
and ``server``. Every field has a default so an empty config is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import tomli


@dataclass
class LlmConfig:
    provider: str = "mock"              # "mock" | "live"
    model: str = "gpt-4o"
    embedding_model: str = "text-embedding-3-small"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "RESPARK_API_KEY"
    max_retries: int = 2
    timeout_s: float = 60.0
    multimodal: bool = False
    transcript: str = ""                # path to a mock transcript file


@dataclass
class SandboxConfig:
    command: str = ""                   # template with {script}; empty = current interpreter
    timeout_s: float = 60.0
    max_output_bytes: int = 16 * 1024 * 1024
    allow_network: bool = False
    max_parallel: int = 4


@dataclass
class AdaptConfig:
    max_attempts: int = 3
    table_head_rows: int = 20


@dataclass
class RankingConfig:
    field_weight: float = 1.0


@dataclass
class IngestConfig:
    delimiter: str = ","


@dataclass
class AppConfig:
    llm: LlmConfig = field(default_factory=LlmConfig)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    ranking: RankingConfig = field(default_factory=RankingConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    store_path: str = "respark-store"
    server_addr: str = "127.0.0.1:8040"


def _apply(section: dict, target) -> None:
    for key, value in section.items():
        if hasattr(target, key):
            setattr(target, key, value)


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load configuration, falling back to defaults for anything unset."""
    cfg = AppConfig()
    if path is None:
        return cfg
    raw = tomli.loads(Path(path).read_text(encoding="utf-8"))
    for name in ("llm", "sandbox", "adapt", "ranking", "ingest"):
        if name in raw:
            _apply(raw[name], getattr(cfg, name))
    if "store" in raw and "path" in raw["store"]:
        cfg.store_path = raw["store"]["path"]
    if "server" in raw and "addr" in raw["server"]:
        cfg.server_addr = raw["server"]["addr"]
    return cfg
