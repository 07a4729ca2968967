"""Unified run configuration: JSON file, env fallback, flag overrides.

One document with model / training / dataset / masking / service
sections.  Values resolve as flags > config file > defaults; the file
path itself comes from --config or the PLANMAE_CONFIG environment
variable.  Unknown sections or keys are rejected rather than ignored,
so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields

from planmae.errors import ConfigError
from planmae.images import MODE_COLORED, MODE_LINE
from planmae.model import ModelConfig
from planmae.training import TrainConfig

ENV_CONFIG = "PLANMAE_CONFIG"


@dataclass(frozen=True)
class DataConfig:
    root: str | None = None
    train: int = 7000
    val: int = 500
    test: int = 500
    seed: int = 0
    mode: str = MODE_COLORED
    resolution: int = 256


@dataclass(frozen=True)
class MaskConfig:
    strategy: str = "random"
    ratio: float = 0.75
    seed: int = 0
    side: str = "left"
    anchor: str = "tl"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8631
    checkpoint: str | None = None
    cors_origin: str = "*"
    max_body_bytes: int = 8 * 1024 * 1024


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    dataset: DataConfig = field(default_factory=DataConfig)
    masking: MaskConfig = field(default_factory=MaskConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def to_json(self) -> dict:
        return {
            "model": dataclasses.asdict(self.model),
            "training": dataclasses.asdict(self.training),
            "dataset": dataclasses.asdict(self.dataset),
            "masking": dataclasses.asdict(self.masking),
            "service": dataclasses.asdict(self.service),
        }


_SECTIONS = {
    "model": ModelConfig,
    "training": TrainConfig,
    "dataset": DataConfig,
    "masking": MaskConfig,
    "service": ServiceConfig,
}


def _build_section(name: str, cls, doc: dict):
    allowed = {f.name for f in fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    if name == "training" and "betas" in doc:
        doc = dict(doc, betas=tuple(doc["betas"]))
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad [{name}] section: {exc}") from exc


def load_config(path: str | None = None) -> RunConfig:
    """Resolve a RunConfig from a JSON file path (or env var, or defaults)."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be a JSON object: {path}")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    parts = {}
    for name, cls in _SECTIONS.items():
        section = doc.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a JSON object")
        parts[name] = _build_section(name, cls, section)
    return RunConfig(**parts)


def override(config, **updates):
    """Replace fields on a frozen section config, skipping None values."""
    updates = {k: v for k, v in updates.items() if v is not None}
    return dataclasses.replace(config, **updates) if updates else config


def normalize_mode(mode: str) -> str:
    """Accept "line" as shorthand for the line-drawing mode name."""
    if mode in (MODE_COLORED, MODE_LINE):
        return mode
    if mode == "line":
        return MODE_LINE
    raise ConfigError(f"mode must be 'colored' or 'line_drawing', got {mode!r}")
