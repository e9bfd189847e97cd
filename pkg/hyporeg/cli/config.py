"""Flat ``key = value`` run configuration files and their resolution order."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Any, Mapping

import yaml
from pydantic import ValidationError

from hyporeg.core.errors import ConfigError

from .models import CONFIG_MODELS, RunConfig
from .settings import Settings


logger = logging.getLogger(__name__)


def _normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def _typed(raw: str) -> Any:
    text = raw.strip()
    if not text:
        return None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


_ASSIGNMENT = re.compile(r"^\s*[A-Za-z_][\w-]*\s*=")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse a flat config; a flat YAML mapping is accepted as well."""
    if not any(_ASSIGNMENT.match(line) for line in text.splitlines()):
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{source}: not a key = value file or YAML mapping: {exc}") from exc
        if loaded is None:
            return {}
        if not isinstance(loaded, dict) or any(isinstance(v, dict) for v in loaded.values()):
            raise ConfigError(f"{source}: expected a flat mapping of settings")
        return {_normalize_key(str(k)): v for k, v in loaded.items()}

    values: dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = _normalize_key(key)
        if not key:
            raise ConfigError(f"{source}:{number}: empty key")
        values[key] = _typed(raw)
    return values


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def _settings_defaults(command: str, settings: Settings) -> dict[str, Any]:
    defaults: dict[str, Any] = {
        "out": settings.out_dir,
        "seed": settings.seed,
        "workers": settings.workers,
        "svg": settings.svg,
        "log_level": settings.log_level,
    }
    if command != "demo-nonunique":
        defaults.update(grid_nt=settings.grid_nt, grid_nx=settings.grid_nx, xmax=settings.xmax)
    if command == "rates":
        defaults["reps"] = settings.reps
    if command in {"solve", "rates"}:
        defaults["refine_sweeps"] = settings.refine_sweeps
    return defaults


def resolve_config(
    command: str,
    overrides: Mapping[str, Any],
    settings: Settings,
    config_path: str | Path | None = None,
) -> RunConfig:
    """CLI overrides > config file > environment settings > model defaults."""
    model = CONFIG_MODELS.get(command)
    if model is None:
        raise ConfigError(f"unknown command {command!r}")
    merged = _settings_defaults(command, settings)
    if config_path is not None:
        from_file = load_config_file(config_path)
        file_command = from_file.pop("command", None)
        if file_command is not None and file_command != command:
            raise ConfigError(f"config {config_path} was written for {file_command!r}, not {command!r}")
        merged.update({k: v for k, v in from_file.items() if v is not None})
    merged.update({_normalize_key(k): v for k, v in overrides.items() if v is not None})
    merged["command"] = command
    try:
        return model.model_validate(merged)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in error['loc']) or 'config'}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigError(f"invalid {command} configuration: {details}") from exc
