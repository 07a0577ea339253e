"""Run configuration: flat key=value files with TTCSW_* environment
overrides, plus the provenance header stamped into every artifact."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

ENV_PREFIX = "TTCSW_"

# keys understood by the CLI; everything else is carried along untouched
KNOWN_KEYS = (
    "backend_url", "auth_token", "timeout", "retries", "max_batch",
    "cache_dir", "seed", "jobs", "strict", "source_lang",
)


class ConfigError(Exception):
    pass


def load_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().lower()] = value.strip()
    return values


def env_overrides(environ=None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            out[key[len(ENV_PREFIX):].lower()] = value
    return out


@dataclass
class RunConfig:
    backend_url: Optional[str] = None
    auth_token: Optional[str] = None
    timeout: float = 30.0
    retries: int = 3
    max_batch: int = 16
    cache_dir: Optional[str] = None
    seed: int = 0
    jobs: int = 1
    strict: bool = False
    source_lang: str = "en"
    extra: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, environ=None) -> "RunConfig":
        values: dict[str, str] = {}
        if path is not None:
            values.update(load_config_file(path))
        values.update(env_overrides(environ))
        cfg = cls()
        for key, value in values.items():
            if key in ("timeout",):
                setattr(cfg, key, float(value))
            elif key in ("retries", "max_batch", "seed", "jobs"):
                setattr(cfg, key, int(value))
            elif key in ("strict",):
                cfg.strict = value.strip().lower() in ("1", "true", "yes", "on")
            elif key in KNOWN_KEYS:
                setattr(cfg, key, value)
            else:
                cfg.extra[key] = value
        return cfg

    def digest(self) -> str:
        blob = json.dumps({
            "backend_url": self.backend_url, "timeout": self.timeout,
            "retries": self.retries, "max_batch": self.max_batch,
            "seed": self.seed, "strict": self.strict,
            "source_lang": self.source_lang, "extra": self.extra,
        }, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def artifact_header(self, **extra) -> dict:
        header = {"config_digest": self.digest(), "seed": self.seed}
        header.update(extra)
        return header
