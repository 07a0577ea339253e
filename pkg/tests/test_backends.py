import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from ttcsw.backends import (ALIGN_NONE, AlwaysNoneAligner, CacheMissError,
                            CountingBackend, DictTranslator, GenerationRequest,
                            HttpBackend, IdentityBackend, ProtocolError,
                            TableBackend, TransportError, TranslationRequest,
                            with_cache)


class TestRequests:
    def test_empty_texts_rejected(self):
        with pytest.raises(ValueError):
            TranslationRequest(texts=(), source_lang="en", target_lang="es")

    def test_bad_language_code_rejected(self):
        with pytest.raises(ValueError):
            TranslationRequest(texts=("x",), source_lang="english",
                               target_lang="es")

    def test_bad_task_rejected(self):
        with pytest.raises(ValueError):
            GenerationRequest(inputs=("x",), task="classify")


class TestMocks:
    def test_identity_translate(self):
        req = TranslationRequest(texts=("a", "b"), source_lang="en",
                                 target_lang="es")
        resp = IdentityBackend().translate(req)
        assert resp.outputs == ["a", "b"]

    def test_dict_translator_passes_tags(self):
        backend = DictTranslator({"good": "bueno"})
        req = TranslationRequest(texts=("<a1>good</a1>",), source_lang="en",
                                 target_lang="es", preserve_tags=True)
        assert backend.translate(req).outputs == ["<a1>bueno</a1>"]

    def test_table_backend_semantics(self):
        backend = TableBackend({"known": "answer"})
        resp = backend.generate(GenerationRequest(
            inputs=("known", "unknown"), task="align"))
        assert resp.outputs == ["answer", ALIGN_NONE]
        resp = backend.generate(GenerationRequest(
            inputs=("unknown",), task="aste"))
        assert resp.outputs == [""]

    def test_batch_positional_contract(self):
        backend = TableBackend({"a": "1", "b": "2", "c": "3"})
        resp = backend.generate(GenerationRequest(
            inputs=("a", "b", "c"), task="align"))
        assert resp.outputs == ["1", "2", "3"]

    def test_always_none(self):
        resp = AlwaysNoneAligner().generate(GenerationRequest(
            inputs=("x", "y"), task="align"))
        assert resp.outputs == [ALIGN_NONE, ALIGN_NONE]


class _Handler(BaseHTTPRequestHandler):
    server_version = "test"
    behavior = {"fail_times": 0, "mode": "echo"}
    counters = {"calls": 0, "failures_left": 0}

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"status": "ok", "model_id": "test-model"})
        else:
            self._reply(404, {})

    def do_POST(self):
        type(self).counters["calls"] += 1
        if type(self).counters["failures_left"] > 0:
            type(self).counters["failures_left"] -= 1
            self._reply(503, {"error": "model unavailable"})
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        if self.path == "/v1/translate":
            if "texts" not in body:
                self._reply(422, {"error": "missing texts"})
                return
            if type(self).behavior["mode"] == "wrong-cardinality":
                self._reply(200, {"translations": []})
                return
            self._reply(200, {"translations": [f"T:{t}" for t in body["texts"]]})
        elif self.path == "/v1/generate":
            if "inputs" not in body or body.get("task") not in ("aste", "align"):
                self._reply(422, {"error": "bad request"})
                return
            self._reply(200, {"outputs": [f"G:{t}" for t in body["inputs"]]})
        else:
            self._reply(404, {})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def http_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.counters["calls"] = 0
    _Handler.counters["failures_left"] = 0
    _Handler.behavior["mode"] = "echo"
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestHttpBackend:
    def test_translate_roundtrip(self, http_server):
        backend = HttpBackend(http_server, retries=0)
        resp = backend.translate(TranslationRequest(
            texts=("hola", "adios"), source_lang="es", target_lang="en"))
        assert resp.outputs == ["T:hola", "T:adios"]
        assert resp.backend_id.startswith("http:")

    def test_generate_roundtrip(self, http_server):
        backend = HttpBackend(http_server, retries=0)
        resp = backend.generate(GenerationRequest(
            inputs=("x",), task="aste", target_lang_hint="es"))
        assert resp.outputs == ["G:x"]

    def test_health(self, http_server):
        backend = HttpBackend(http_server, retries=0)
        assert backend.health()["status"] == "ok"

    def test_retry_then_success(self, http_server):
        _Handler.counters["failures_left"] = 2
        backend = HttpBackend(http_server, retries=3, backoff=0.01)
        resp = backend.translate(TranslationRequest(
            texts=("x",), source_lang="es", target_lang="en"))
        assert resp.outputs == ["T:x"]
        assert _Handler.counters["calls"] == 3

    def test_retries_exhausted_transport_error(self, http_server):
        _Handler.counters["failures_left"] = 10
        backend = HttpBackend(http_server, retries=2, backoff=0.01)
        with pytest.raises(TransportError):
            backend.translate(TranslationRequest(
                texts=("x",), source_lang="es", target_lang="en"))
        assert _Handler.counters["calls"] == 3

    def test_unreachable_host(self):
        backend = HttpBackend("http://127.0.0.1:1", retries=1, backoff=0.01)
        with pytest.raises(TransportError):
            backend.translate(TranslationRequest(
                texts=("x",), source_lang="es", target_lang="en"))

    def test_cardinality_violation_protocol_error(self, http_server):
        _Handler.behavior["mode"] = "wrong-cardinality"
        backend = HttpBackend(http_server, retries=0)
        with pytest.raises(ProtocolError):
            backend.translate(TranslationRequest(
                texts=("x",), source_lang="es", target_lang="en"))

    def test_batching_splits_requests(self, http_server):
        backend = HttpBackend(http_server, retries=0, max_batch=2)
        texts = tuple(f"t{i}" for i in range(5))
        resp = backend.translate(TranslationRequest(
            texts=texts, source_lang="es", target_lang="en"))
        assert resp.outputs == [f"T:{t}" for t in texts]
        assert _Handler.counters["calls"] == 3  # ceil(5/2)


class TestCache:
    def _request(self):
        return TranslationRequest(texts=("hola",), source_lang="es",
                                  target_lang="en")

    def test_hit_skips_backend(self, tmp_path):
        counting = CountingBackend(IdentityBackend())
        backend = with_cache(counting, tmp_path / "cache")
        backend.translate(self._request())
        backend.translate(self._request())
        assert counting.calls == 1

    def test_persists_across_instances(self, tmp_path):
        cache_dir = tmp_path / "cache"
        backend = with_cache(CountingBackend(IdentityBackend()), cache_dir)
        first = backend.translate(self._request())

        counting = CountingBackend(IdentityBackend())
        fresh = with_cache(counting, cache_dir)
        second = fresh.translate(self._request())
        assert second.outputs == first.outputs
        assert counting.calls == 0

    def test_replay_mode_errors_on_miss(self, tmp_path):
        backend = with_cache(IdentityBackend(), tmp_path / "cache", replay=True)
        with pytest.raises(CacheMissError):
            backend.translate(self._request())

    def test_corrupt_entry_treated_as_miss(self, tmp_path):
        cache_dir = tmp_path / "cache"
        counting = CountingBackend(IdentityBackend())
        backend = with_cache(counting, cache_dir)
        backend.translate(self._request())
        for entry in cache_dir.glob("*.json"):
            entry.write_text("{broken", encoding="utf-8")
        backend.translate(self._request())
        assert counting.calls == 2

    def test_key_distinguishes_backends(self, tmp_path):
        cache_dir = tmp_path / "cache"
        with_cache(IdentityBackend(), cache_dir).translate(self._request())
        counting = CountingBackend(DictTranslator({"hola": "hello"}))
        second = with_cache(counting, cache_dir)
        resp = second.translate(self._request())
        assert counting.calls == 1  # different backend_id -> different key
        assert resp.outputs == ["hello"]

    def test_transparent_outputs(self, tmp_path):
        request = self._request()
        direct = DictTranslator({"hola": "hello"}).translate(request)
        cached = with_cache(DictTranslator({"hola": "hello"}),
                            tmp_path / "c")
        assert cached.translate(request).outputs == direct.outputs
        assert cached.translate(request).outputs == direct.outputs
