"""Scan configuration: defaults, .agent-audit.yaml, environment, CLI flags.

Precedence is config file < AGENT_AUDIT_* environment variables < explicit
flags; each layer only overrides keys it actually sets.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

CONFIG_FILENAME = ".agent-audit.yaml"

ENV_PREFIX = "AGENT_AUDIT_"

# env var suffix -> (config key, parser)
_ENV_KEYS = {
    "FAIL_ON": "fail_on",
    "FORMAT": "format",
    "BASELINE": "baseline",
    "TRUST_LIST": "trust_list",
    "EXCLUDE": "exclusions",
    "SUPPRESS": "suppress",
}

_LIST_KEYS = {"trust_list", "exclusions", "suppress", "tool_decorators"}


class ConfigError(ValueError):
    """Raised for unusable configuration files or values."""


@dataclass
class ScanConfig:
    """Effective settings for one scan invocation."""

    root: str = "."
    exclusions: list[str] = field(default_factory=list)
    suppress: list[str] = field(default_factory=list)
    trust_list: list[str] = field(default_factory=list)
    tool_decorators: list[str] = field(default_factory=list)
    baseline: Optional[str] = None
    fail_on: Optional[str] = None
    format: str = "terminal"
    verbose: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "exclusions": list(self.exclusions),
            "suppress": list(self.suppress),
            "trust_list": list(self.trust_list),
            "tool_decorators": list(self.tool_decorators),
            "baseline": self.baseline,
            "fail_on": self.fail_on,
            "format": self.format,
            "verbose": self.verbose,
        }


def _coerce_list(value: Any, key: str) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, list) and all(isinstance(item, str) for item in value):
        return list(value)
    raise ConfigError(f"{key} must be a list of strings or a comma-joined string")


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse one .agent-audit.yaml into a plain settings dict."""
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"unparseable config {path}: {exc}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    settings: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _LIST_KEYS:
            settings[key] = _coerce_list(value, key)
        else:
            settings[key] = value
    return settings


def env_settings(environ: Mapping[str, str]) -> dict[str, Any]:
    settings: dict[str, Any] = {}
    for suffix, key in _ENV_KEYS.items():
        value = environ.get(ENV_PREFIX + suffix)
        if value is None:
            continue
        settings[key] = _coerce_list(value, key) if key in _LIST_KEYS else value
    return settings


def load_config(
    root: str | Path,
    environ: Optional[Mapping[str, str]] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ScanConfig:
    """Build the effective config for a scan root.

    overrides come from CLI flags and win over everything; keys with
    value None are treated as unset.
    """
    root_path = Path(root)
    config = ScanConfig(root=str(root_path))

    layers: list[dict[str, Any]] = []
    config_file = root_path / CONFIG_FILENAME
    if config_file.is_file():
        layers.append(read_config_file(config_file))
    layers.append(env_settings(environ if environ is not None else os.environ))
    if overrides:
        layers.append({k: v for k, v in overrides.items() if v is not None})

    for layer in layers:
        for key, value in layer.items():
            if key == "exclusions":
                # Exclusion globs accumulate across layers.
                config.exclusions = config.exclusions + list(value)
            elif hasattr(config, key):
                setattr(config, key, value)
    return config
