"""Configuration loading: defaults, section application, path overrides."""

from __future__ import annotations

from respark.config import AppConfig, load_config


def test_defaults_without_file():
    config = load_config(None)
    assert config.llm.provider == "mock"
    assert config.adapt.max_attempts == 3
    assert config.sandbox.timeout_s == 60.0
    assert config.sandbox.max_output_bytes == 16 * 1024 * 1024
    assert config.ranking.field_weight == 1.0
    assert config.ingest.delimiter == ","
    assert config.store_path == "respark-store"
    assert config.server_addr == "127.0.0.1:8040"


def test_full_file(tmp_path):
    path = tmp_path / "respark.toml"
    path.write_text(
        """
[llm]
provider = "live"
model = "other-model"
max_retries = 5

[sandbox]
command = "python3 {script}"
timeout_s = 12.5
allow_network = true

[adapt]
max_attempts = 2
table_head_rows = 7

[ranking]
field_weight = 0.25

[ingest]
delimiter = ";"

[store]
path = "/var/lib/respark"

[server]
addr = "0.0.0.0:9000"
""",
        encoding="utf-8",
    )
    config = load_config(path)
    assert config.llm.provider == "live"
    assert config.llm.model == "other-model"
    assert config.llm.max_retries == 5
    assert config.sandbox.command == "python3 {script}"
    assert config.sandbox.timeout_s == 12.5
    assert config.sandbox.allow_network is True
    assert config.adapt.max_attempts == 2
    assert config.adapt.table_head_rows == 7
    assert config.ranking.field_weight == 0.25
    assert config.ingest.delimiter == ";"
    assert config.store_path == "/var/lib/respark"
    assert config.server_addr == "0.0.0.0:9000"


def test_partial_sections_keep_defaults(tmp_path):
    path = tmp_path / "respark.toml"
    path.write_text("[adapt]\nmax_attempts = 9\n", encoding="utf-8")
    config = load_config(path)
    assert config.adapt.max_attempts == 9
    assert config.adapt.table_head_rows == 20
    assert config.llm.provider == "mock"


def test_unknown_keys_ignored(tmp_path):
    path = tmp_path / "respark.toml"
    path.write_text("[llm]\nflavor = \"mint\"\n", encoding="utf-8")
    config = load_config(path)
    assert not hasattr(config.llm, "flavor")
    assert isinstance(config, AppConfig)
