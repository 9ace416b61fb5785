"""Run configuration: JSON config file merged with CLI flag overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

MODES = ("live", "record", "replay")
PREDICTORS = ("oracle", "gateway")


@dataclass
class RunConfig:
    dataset: str | None = None
    tables: str | None = None
    databases: str | None = None
    index_path: str | None = None
    transcripts: str | None = None
    output: str | None = None
    model_id: str = "gpt-4o-mini"
    linking_model_id: str | None = None  # defaults to model_id
    embedder: str = "hashed"
    predictor: str = "gateway"
    n_examples: int = 7  # best average accuracy on the 1..9 grid
    rounds: int = 2
    focus_enabled: bool = True
    mode: str = "replay"
    workers: int = 4
    max_concurrent_requests: int | None = None  # None: bounded by workers
    max_tokens: int = 512
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.n_examples < 1:
            raise ConfigError(f"n_examples must be >= 1, got {self.n_examples}")
        if self.rounds not in (1, 2):
            raise ConfigError(f"rounds must be 1 or 2, got {self.rounds}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.predictor not in PREDICTORS:
            raise ConfigError(f"predictor must be one of {PREDICTORS}, got {self.predictor!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def linking_model(self) -> str:
        return self.linking_model_id or self.model_id

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def merged(self, **overrides) -> "RunConfig":
        updates = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **updates)
