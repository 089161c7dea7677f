"""Service configuration: line-based ``key = value`` file with environment
overrides prefixed ``GOVSHEET_`` (e.g. GOVSHEET_LISTEN_ADDR)."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_PREFIX = "GOVSHEET_"
_TRUE = {"1", "true", "yes", "on"}


@dataclass
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8080"
    store_path: str = "govsheet.db"
    admin_token: str = ""
    admin_principal: str = "admin"
    log_level: str = "info"
    ui_dir: str = ""
    sync_writes: bool = True

    @property
    def host(self) -> str:
        host, _, _ = self.listen_addr.partition(":")
        return host or "127.0.0.1"

    @property
    def port(self) -> int:
        _, _, port = self.listen_addr.partition(":")
        return int(port) if port else 8080


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(path: str | Path | None = None) -> ServiceConfig:
    config = ServiceConfig()
    file_values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    known = {f.name: f.type for f in fields(ServiceConfig)}
    for source in (file_values, _env_values()):
        for key, value in source.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            if key == "sync_writes":
                setattr(config, key, value.lower() in _TRUE)
            else:
                setattr(config, key, value)
    return config


def _env_values() -> dict[str, str]:
    values = {}
    for field in fields(ServiceConfig):
        env_key = ENV_PREFIX + field.name.upper()
        if env_key in os.environ:
            values[field.name] = os.environ[env_key]
    return values
