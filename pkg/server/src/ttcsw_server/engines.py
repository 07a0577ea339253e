"""Inference engines behind the protocol endpoints.

Echo and fixture engines are deterministic and dependency-free; the
HuggingFace engine loads real checkpoints and is only imported when the
server runs in models mode.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

from .config import DecodingConfig, ServerConfig, forced_language

logger = logging.getLogger(__name__)

ALIGN_NONE = "None"


class EngineError(Exception):
    """The engine cannot serve requests (drives 503 responses)."""


class Engine:
    model_id = "engine"

    def translate(self, texts: list[str], source_lang: str, target_lang: str,
                  preserve_tags: bool) -> list[str]:
        raise NotImplementedError

    def generate(self, inputs: list[str], task: str,
                 target_lang_hint: Optional[str]) -> list[str]:
        raise NotImplementedError


class EchoEngine(Engine):
    """Returns inputs unchanged; the integration-test default."""

    model_id = "echo"

    def translate(self, texts, source_lang, target_lang, preserve_tags):
        return list(texts)

    def generate(self, inputs, task, target_lang_hint):
        return list(inputs)


class FixtureEngine(Engine):
    """Deterministic responses from an input -> output lookup table.

    Unknown inputs answer `None` for the align task and the empty string
    otherwise.
    """

    model_id = "fixture"

    def __init__(self, table: dict[str, str]):
        if not isinstance(table, dict) or not all(
                isinstance(k, str) and isinstance(v, str)
                for k, v in table.items()):
            raise EngineError("fixture table must map strings to strings")
        self.table = dict(table)

    @classmethod
    def from_file(cls, path) -> "FixtureEngine":
        try:
            table = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise EngineError(f"cannot load fixture table {path}: {exc}") from exc
        return cls(table)

    def _lookup(self, key: str, task: Optional[str]) -> str:
        if key in self.table:
            return self.table[key]
        return ALIGN_NONE if task == "align" else ""

    def translate(self, texts, source_lang, target_lang, preserve_tags):
        return [self._lookup(t, None) for t in texts]

    def generate(self, inputs, task, target_lang_hint):
        return [self._lookup(t, task) for t in inputs]


class HfEngine(Engine):
    """Seq2seq checkpoints via transformers.

    Translation-family models get the target language id forced as the
    first generated token (with the documented Basque -> Spanish
    substitution for m2m100); other families are prompted as-is.
    """

    def __init__(self, models: dict[str, str], device: str,
                 decoding: DecodingConfig):
        try:
            from transformers import (AutoModelForSeq2SeqLM, AutoTokenizer)
        except ImportError as exc:
            raise EngineError(
                "models mode needs the 'models' extra (transformers, torch)"
            ) from exc
        self.device = device
        self.decoding = decoding
        self._loaded: dict[str, tuple] = {}  # task -> (model_id, (tok, model))
        by_id: dict[str, tuple] = {}
        try:
            for task, model_id in models.items():
                if model_id not in by_id:
                    tokenizer = AutoTokenizer.from_pretrained(model_id)
                    model = AutoModelForSeq2SeqLM.from_pretrained(model_id)
                    model.to(device)
                    model.eval()
                    by_id[model_id] = (tokenizer, model)
                self._loaded[task] = (model_id, by_id[model_id])
        except Exception as exc:  # checkpoint resolution is environmental
            raise EngineError(f"model load failed: {exc}") from exc
        self.model_id = "+".join(sorted(by_id))

    def _run(self, task: str, inputs: list[str],
             lang: Optional[str]) -> list[str]:
        import torch

        model_id, (tokenizer, model) = self._loaded[task]
        forced = forced_language(model_id, lang)
        kwargs = {"num_beams": self.decoding.num_beams,
                  "max_length": self.decoding.max_length}
        if forced is not None and hasattr(tokenizer, "get_lang_id"):
            kwargs["forced_bos_token_id"] = tokenizer.get_lang_id(forced)
        batch = tokenizer(inputs, return_tensors="pt", padding=True,
                          truncation=True,
                          max_length=self.decoding.max_length).to(self.device)
        with torch.no_grad():
            generated = model.generate(**batch, **kwargs)
        return tokenizer.batch_decode(generated, skip_special_tokens=True)

    def translate(self, texts, source_lang, target_lang, preserve_tags):
        model_id, (tokenizer, _) = self._loaded["translate"]
        if hasattr(tokenizer, "src_lang"):
            tokenizer.src_lang = source_lang
        return self._run("translate", list(texts), target_lang)

    def generate(self, inputs, task, target_lang_hint):
        return self._run(task, list(inputs), target_lang_hint)


def build_engine(config: ServerConfig) -> Engine:
    if config.mode == "echo":
        return EchoEngine()
    if config.mode == "fixture":
        return FixtureEngine.from_file(config.fixture_table)
    return HfEngine(config.models, config.device, config.decoding)
