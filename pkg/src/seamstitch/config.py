"""Pipeline configuration: one JSON document covering every stage constant."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .field import FieldConfig
from .geometry import RansacConfig
from .localwarp import WarpConfig
from .seamzone import ZoneConfig


@dataclass(frozen=True)
class MatcherConfig:
    mode: str = "builtin"        # "builtin" or "file"
    max_matches: int = 2000


@dataclass(frozen=True)
class ChainConfig:
    brightness_tol: float = 20.0


@dataclass(frozen=True)
class ComposeConfig:
    seam_sigma: float = 2.0
    seam_band: int = 8
    disagreement_scale: float = 8.0


@dataclass(frozen=True)
class PipelineConfig:
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    warp: WarpConfig = field(default_factory=WarpConfig)
    field_: FieldConfig = field(default_factory=FieldConfig)
    zone: ZoneConfig = field(default_factory=ZoneConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)
    compose: ComposeConfig = field(default_factory=ComposeConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["field"] = doc.pop("field_")
        return doc

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


_SECTIONS = {
    "matcher": (MatcherConfig, "matcher"),
    "ransac": (RansacConfig, "ransac"),
    "warp": (WarpConfig, "warp"),
    "field": (FieldConfig, "field_"),
    "zone": (ZoneConfig, "zone"),
    "chain": (ChainConfig, "chain"),
    "compose": (ComposeConfig, "compose"),
}


def _build_section(cls, doc: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from exc


def config_from_dict(doc: dict) -> PipelineConfig:
    """Strict parse: unknown keys anywhere are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    unknown = set(doc) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kwargs = {}
    for key, (cls, attr) in _SECTIONS.items():
        section = doc.get(key, {})
        if not isinstance(section, dict):
            raise ConfigError(f"'{key}' must be an object")
        kwargs[attr] = _build_section(cls, section, key)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("'seed' must be an integer")
    return PipelineConfig(seed=seed, **kwargs)


def load_config(path) -> PipelineConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)
