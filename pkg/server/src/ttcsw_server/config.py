"""Server configuration: which engine backs each task, device placement,
batch limits, forced-language policy and decoding defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

TASKS = ("translate", "aste", "align")

# translation-family models need the target language id forced as the
# first generated token; seq2seq LM families (mT5 etc.) do not
TRANSLATION_FAMILIES = ("m2m100", "mbart", "nllb")

# languages absent from a family's inventory fall back to a stand-in id
LANG_SUBSTITUTIONS = {
    "m2m100": {"eu": "es"},
}


class ConfigError(Exception):
    pass


@dataclass
class DecodingConfig:
    num_beams: int = 4
    max_length: int = 128

    def to_dict(self) -> dict:
        return {"num_beams": self.num_beams, "max_length": self.max_length}


@dataclass
class ServerConfig:
    mode: str = "echo"  # echo | fixture | models
    fixture_table: Optional[str] = None
    models: dict[str, str] = field(default_factory=dict)  # task -> model id
    device: str = "cpu"
    max_batch_size: int = 64
    decoding: DecodingConfig = field(default_factory=DecodingConfig)

    def __post_init__(self):
        if self.mode not in ("echo", "fixture", "models"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "fixture" and not self.fixture_table:
            raise ConfigError("fixture mode needs a lookup table file")
        if self.mode == "models":
            missing = [t for t in TASKS if t not in self.models]
            if missing:
                raise ConfigError(f"models mode: no model for tasks {missing}")
        for task in self.models:
            if task not in TASKS:
                raise ConfigError(f"unknown task {task!r}")
        if self.max_batch_size < 1:
            raise ConfigError("max_batch_size must be >= 1")

    @classmethod
    def from_file(cls, path) -> "ServerConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        decoding = DecodingConfig(**raw.pop("decoding", {}))
        return cls(decoding=decoding, **raw)


def model_family(model_id: str) -> Optional[str]:
    lowered = model_id.lower()
    for family in TRANSLATION_FAMILIES:
        if family in lowered:
            return family
    return None


def forced_language(model_id: str, lang: Optional[str]) -> Optional[str]:
    """Language id to force as the first generated token, after any
    per-family substitution; None when the family does not use one."""
    family = model_family(model_id)
    if family is None or lang is None:
        return None
    return LANG_SUBSTITUTIONS.get(family, {}).get(lang, lang)
