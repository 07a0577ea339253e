"""Uniform access to the three inference capabilities (translation,
structural generation, alignment prediction).

Every remote call goes through one small HTTP protocol so the actual
service (commercial translation API, fine-tuned seq2seq server, test
fixture) is substitutable:

    POST /v1/translate  {"texts": [...], "source_lang": "en",
                         "target_lang": "es", "preserve_tags": true}
                        -> {"translations": [...]}
    POST /v1/generate   {"inputs": [...], "task": "aste"|"align",
                         "target_lang_hint": "es"|null}
                        -> {"outputs": [...]}
    GET  /health        -> {"status": "ok", "model_id": "..."}

Responses always preserve input order and cardinality; that is asserted
on every call.  The deterministic mock backends used in tests implement
the same interface, and `with_cache` adds a content-addressed on-disk
response cache in front of any backend.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

logger = logging.getLogger(__name__)

ALIGN_NONE = "None"

_LANG_RE = re.compile(r"^[a-z]{2}$")


class BackendError(Exception):
    """Base class for backend failures."""


class TransportError(BackendError):
    """Network-level failure that survived all retries."""


class ProtocolError(BackendError):
    """The service answered, but not in the expected shape."""


class CacheMissError(BackendError):
    """Replay mode hit a cold cache entry."""


@dataclass(frozen=True)
class TranslationRequest:
    texts: tuple[str, ...]
    source_lang: str
    target_lang: str
    preserve_tags: bool = False

    def __post_init__(self):
        object.__setattr__(self, "texts", tuple(self.texts))
        if not self.texts:
            raise ValueError("texts must be a non-empty list")
        for code in (self.source_lang, self.target_lang):
            if not _LANG_RE.match(code):
                raise ValueError(f"not an ISO 639-1 code: {code!r}")

    def payload(self) -> dict:
        return {"texts": list(self.texts), "source_lang": self.source_lang,
                "target_lang": self.target_lang,
                "preserve_tags": self.preserve_tags}


@dataclass(frozen=True)
class GenerationRequest:
    inputs: tuple[str, ...]
    task: str
    target_lang_hint: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise ValueError("inputs must be a non-empty list")
        if self.task not in ("aste", "align"):
            raise ValueError(f"task must be 'aste' or 'align', got {self.task!r}")
        if self.target_lang_hint is not None and not _LANG_RE.match(self.target_lang_hint):
            raise ValueError(f"not an ISO 639-1 code: {self.target_lang_hint!r}")

    def payload(self) -> dict:
        return {"inputs": list(self.inputs), "task": self.task,
                "target_lang_hint": self.target_lang_hint}


@dataclass
class BackendResponse:
    outputs: list[str]
    latency: float
    backend_id: str


def _check_cardinality(n_inputs: int, outputs: Sequence, backend_id: str) -> None:
    if len(outputs) != n_inputs:
        raise ProtocolError(
            f"{backend_id}: got {len(outputs)} outputs for {n_inputs} inputs")


class Backend:
    """Interface shared by the HTTP client and the mocks."""

    backend_id = "backend"

    def translate(self, request: TranslationRequest) -> BackendResponse:
        raise NotImplementedError

    def generate(self, request: GenerationRequest) -> BackendResponse:
        raise NotImplementedError


class HttpBackend(Backend):
    """Client for the wire protocol with retry, batching and auth."""

    def __init__(self, base_url: str, auth_token: Optional[str] = None,
                 timeout: float = 30.0, retries: int = 3,
                 backoff: float = 0.5, max_batch: int = 16):
        self.base_url = base_url.rstrip("/")
        self.auth_token = auth_token
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.max_batch = max_batch
        self.backend_id = f"http:{self.base_url}"
        self._session = requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        return headers

    def _post(self, endpoint: str, payload: dict) -> dict:
        url = f"{self.base_url}{endpoint}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._session.post(
                    url, json=payload, headers=self._headers(),
                    timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("attempt %d to %s failed: %s", attempt + 1, url, exc)
                continue
            if response.status_code >= 500:
                last_error = TransportError(
                    f"{url} returned {response.status_code}")
                logger.warning("attempt %d: %s", attempt + 1, last_error)
                continue
            if response.status_code != 200:
                raise ProtocolError(
                    f"{url} returned {response.status_code}: {response.text[:200]}")
            try:
                return response.json()
            except ValueError as exc:
                raise ProtocolError(f"{url} returned non-JSON body") from exc
        raise TransportError(f"{url} unreachable after {self.retries + 1} "
                             f"attempts: {last_error}")

    def _batched(self, items: Sequence[str], call: Callable[[list[str]], list[str]]) -> list[str]:
        outputs: list[str] = []
        for start in range(0, len(items), self.max_batch):
            outputs.extend(call(list(items[start:start + self.max_batch])))
        return outputs

    def translate(self, request: TranslationRequest) -> BackendResponse:
        started = time.monotonic()

        def call(batch: list[str]) -> list[str]:
            payload = dict(request.payload(), texts=batch)
            body = self._post("/v1/translate", payload)
            if not isinstance(body, dict) or "translations" not in body:
                raise ProtocolError(f"{self.backend_id}: missing 'translations'")
            out = body["translations"]
            _check_cardinality(len(batch), out, self.backend_id)
            return [str(t) for t in out]

        outputs = self._batched(request.texts, call)
        _check_cardinality(len(request.texts), outputs, self.backend_id)
        return BackendResponse(outputs, time.monotonic() - started, self.backend_id)

    def generate(self, request: GenerationRequest) -> BackendResponse:
        started = time.monotonic()

        def call(batch: list[str]) -> list[str]:
            payload = dict(request.payload(), inputs=batch)
            body = self._post("/v1/generate", payload)
            if not isinstance(body, dict) or "outputs" not in body:
                raise ProtocolError(f"{self.backend_id}: missing 'outputs'")
            out = body["outputs"]
            _check_cardinality(len(batch), out, self.backend_id)
            return [str(t) for t in out]

        outputs = self._batched(request.inputs, call)
        _check_cardinality(len(request.inputs), outputs, self.backend_id)
        return BackendResponse(outputs, time.monotonic() - started, self.backend_id)

    def health(self) -> dict:
        url = f"{self.base_url}/health"
        try:
            response = self._session.get(url, headers=self._headers(),
                                         timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"{url}: {exc}") from exc
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError(f"{url} returned non-JSON body") from exc


# ---------------------------------------------------------------------------
# deterministic mocks
# ---------------------------------------------------------------------------

class IdentityBackend(Backend):
    """Echoes inputs back; identity translation and echo generation."""

    backend_id = "mock:identity"

    def translate(self, request: TranslationRequest) -> BackendResponse:
        return BackendResponse(list(request.texts), 0.0, self.backend_id)

    def generate(self, request: GenerationRequest) -> BackendResponse:
        return BackendResponse(list(request.inputs), 0.0, self.backend_id)


# tag tokens pass through dictionary translation untouched
_TOKEN_RE = re.compile(r"(</?[ao]\d+>)|(\s+)|([^\s<]+|<)")


class DictTranslator(Backend):
    """Word-by-word lexicon translation; inline tags pass through."""

    def __init__(self, lexicon: dict[str, str], name: str = "dict"):
        self.lexicon = dict(lexicon)
        self.backend_id = f"mock:{name}"

    def _translate_text(self, text: str) -> str:
        out = []
        for m in _TOKEN_RE.finditer(text):
            tag, space, word = m.group(1), m.group(2), m.group(3)
            if tag or space:
                out.append(m.group(0))
                continue
            bare = word.strip(".,;:!?\"'")
            replacement = self.lexicon.get(bare, self.lexicon.get(bare.lower()))
            if replacement is None:
                out.append(word)
            else:
                out.append(word.replace(bare, replacement, 1))
        return "".join(out)

    def translate(self, request: TranslationRequest) -> BackendResponse:
        return BackendResponse([self._translate_text(t) for t in request.texts],
                               0.0, self.backend_id)

    def generate(self, request: GenerationRequest) -> BackendResponse:
        raise ProtocolError(f"{self.backend_id} does not serve generation")


class TableBackend(Backend):
    """Lookup-table backend: exact input -> stored output.

    Misses return `None` for the align task and the empty string
    otherwise, exactly like the model server's fixture mode.
    """

    def __init__(self, table: dict[str, str], name: str = "table",
                 default: Optional[str] = None):
        self.table = dict(table)
        self.backend_id = f"mock:{name}"
        self.default = default

    @classmethod
    def from_file(cls, path, name: str = "table") -> "TableBackend":
        table = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(table, name=name)

    def _lookup(self, key: str, task: Optional[str]) -> str:
        if key in self.table:
            return self.table[key]
        if self.default is not None:
            return self.default
        return ALIGN_NONE if task == "align" else ""

    def translate(self, request: TranslationRequest) -> BackendResponse:
        return BackendResponse([self._lookup(t, None) for t in request.texts],
                               0.0, self.backend_id)

    def generate(self, request: GenerationRequest) -> BackendResponse:
        return BackendResponse(
            [self._lookup(text, request.task) for text in request.inputs],
            0.0, self.backend_id)


class FunctionBackend(Backend):
    """Wraps a pure function input -> output (test utility)."""

    def __init__(self, fn: Callable[[str], str], name: str = "fn"):
        self.fn = fn
        self.backend_id = f"mock:{name}"

    def translate(self, request: TranslationRequest) -> BackendResponse:
        return BackendResponse([self.fn(t) for t in request.texts], 0.0,
                               self.backend_id)

    def generate(self, request: GenerationRequest) -> BackendResponse:
        return BackendResponse([self.fn(t) for t in request.inputs], 0.0,
                               self.backend_id)


class AlwaysNoneAligner(Backend):
    """Answers `None` to every alignment query."""

    backend_id = "mock:none"

    def translate(self, request: TranslationRequest) -> BackendResponse:
        raise ProtocolError(f"{self.backend_id} does not serve translation")

    def generate(self, request: GenerationRequest) -> BackendResponse:
        return BackendResponse([ALIGN_NONE] * len(request.inputs), 0.0,
                               self.backend_id)


class CountingBackend(Backend):
    """Counts calls through to an inner backend (test utility)."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.calls = 0

    def translate(self, request: TranslationRequest) -> BackendResponse:
        self.calls += 1
        return self.inner.translate(request)

    def generate(self, request: GenerationRequest) -> BackendResponse:
        self.calls += 1
        return self.inner.generate(request)


# ---------------------------------------------------------------------------
# response cache
# ---------------------------------------------------------------------------

class CachedBackend(Backend):
    """Content-addressed on-disk cache in front of any backend.

    The key digests (backend_id, kind, full request payload); hits skip
    the inner backend entirely.  In replay mode a miss raises instead of
    calling out, which makes warm-cache runs provably offline.
    """

    def __init__(self, inner: Backend, cache_dir, replay: bool = False):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.replay = replay
        self.backend_id = inner.backend_id
        self._lock = threading.Lock()

    def _key(self, kind: str, payload: dict) -> str:
        blob = json.dumps([self.inner.backend_id, kind, payload],
                          sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _load(self, key: str) -> Optional[list[str]]:
        path = self.cache_dir / f"{key}.json"
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            outputs = entry["outputs"]
            if not isinstance(outputs, list):
                raise ValueError("outputs is not a list")
            return [str(o) for o in outputs]
        except (ValueError, KeyError, OSError) as exc:
            logger.warning("corrupt cache entry %s (%s); treating as miss",
                           path, exc)
            return None

    def _store(self, key: str, kind: str, payload: dict, outputs: list[str]) -> None:
        path = self.cache_dir / f"{key}.json"
        tmp = path.with_name(path.name + f".tmp{threading.get_ident()}")
        entry = {"backend_id": self.inner.backend_id, "kind": kind,
                 "request": payload, "outputs": outputs}
        with self._lock:
            tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
            tmp.replace(path)

    def _cached_call(self, kind: str, payload: dict, n: int,
                     call: Callable[[], BackendResponse]) -> BackendResponse:
        key = self._key(kind, payload)
        outputs = self._load(key)
        if outputs is not None:
            _check_cardinality(n, outputs, f"cache:{self.backend_id}")
            return BackendResponse(outputs, 0.0, self.backend_id)
        if self.replay:
            raise CacheMissError(
                f"replay mode: no cache entry for {kind} request {key[:12]}…")
        response = call()
        self._store(key, kind, payload, response.outputs)
        return response

    def translate(self, request: TranslationRequest) -> BackendResponse:
        return self._cached_call("translate", request.payload(),
                                 len(request.texts),
                                 lambda: self.inner.translate(request))

    def generate(self, request: GenerationRequest) -> BackendResponse:
        return self._cached_call("generate", request.payload(),
                                 len(request.inputs),
                                 lambda: self.inner.generate(request))


def with_cache(backend: Backend, cache_dir, replay: bool = False) -> CachedBackend:
    return CachedBackend(backend, cache_dir, replay=replay)
