"""Run configuration: one JSON or YAML document with a section per component.

Example::

    workers: 4
    seed: 13
    clients:
      qa: {endpoint: "http://localhost:8001/qa", max_in_flight: 16}
    split: {max_words: 14}
    annotate: {roundtrip_mode: normalized_exact, enable_rheme: true}
    format: {plan_order: question_answer}
    control: {drop_threshold: 0.5}
    faithfulness: {max_premise_chars: 4000}
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .annotate import AnnotateConfig
from .control import ControlConfig
from .formats import FormatConfig
from .metrics import FaithfulnessConfig
from .propsplit import SplitConfig


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "split": SplitConfig,
    "annotate": AnnotateConfig,
    "format": FormatConfig,
    "control": ControlConfig,
    "faithfulness": FaithfulnessConfig,
}
_CLIENT_KINDS = ("qg", "qa", "nli", "candidates")
_CLIENT_KEYS = {"endpoint", "timeout", "max_retries", "max_in_flight", "backoff_base"}


@dataclass
class RunConfig:
    workers: int = 1
    seed: int = 0
    clients: dict = field(default_factory=dict)
    split: SplitConfig = field(default_factory=SplitConfig)
    annotate: AnnotateConfig = field(default_factory=AnnotateConfig)
    format: FormatConfig = field(default_factory=FormatConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    faithfulness: FaithfulnessConfig = field(default_factory=FaithfulnessConfig)

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def with_overrides(self, workers: Optional[int] = None, seed: Optional[int] = None) -> "RunConfig":
        cfg = dataclasses.replace(self)
        if workers is not None:
            cfg = dataclasses.replace(cfg, workers=workers)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        cfg.annotate = dataclasses.replace(cfg.annotate, seed=cfg.seed)
        return cfg


def _section(kind, values) -> object:
    if not isinstance(values, dict):
        raise ConfigError(f"section for {kind.__name__} must be a mapping")
    names = {f.name for f in dataclasses.fields(kind)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown {kind.__name__} keys: {sorted(unknown)}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return kind(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind.__name__}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - set(_SECTIONS) - {"workers", "seed", "clients"}
    if unknown:
        raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
    clients = data.get("clients") or {}
    for kind, opts in clients.items():
        if kind not in _CLIENT_KINDS:
            raise ConfigError(f"unknown client {kind!r}")
        bad = set(opts or {}) - _CLIENT_KEYS
        if bad:
            raise ConfigError(f"unknown keys for client {kind!r}: {sorted(bad)}")
    kwargs = {name: _section(kind, data[name]) for name, kind in _SECTIONS.items() if name in data}
    try:
        cfg = RunConfig(
            workers=int(data.get("workers", 1)),
            seed=int(data.get("seed", 0)),
            clients=clients,
            **kwargs,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.with_overrides()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(data or {})
