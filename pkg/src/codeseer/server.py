"""Suggestion service over HTTP/JSON.

POST /v1/suggest  {"context": [token, ...], "k": int}
                  or {"raw_code": "...", "k": int}
GET  /v1/health
POST /v1/tokenize {"raw_code": "..."}

The model is loaded once before the socket binds and never mutated, so
any number of concurrent identical requests produce identical
suggestion lists.  Raw-code requests are lexed server side with the
same profile used for training; trailing constructs cut off at a
cursor (an open string, an unclosed block comment) are tolerated.
"""

import json
import signal
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import PAD_ID, UNK_ID
from .lexer import tokenize
from .neural.checkpoint import CHECKPOINT_MAGIC, load_checkpoint
from .ngram import NGRAM_MAGIC, NGramError, NGramModel
from .profiles import JAVA_PROFILE, LanguageProfile
from .standardize import standardize
from .vocab import Vocabulary

UNK_LABEL = "⟨unk⟩"  # rendered as ⟨unk⟩ in suggestion lists
DEFAULT_BIND = "127.0.0.1:8321"
DEFAULT_MAX_K = 100


class ProtocolError(ValueError):
    """Client-side request problem; maps to a 400 response."""


class ServerStartupError(RuntimeError):
    pass


def load_served_model(checkpoint_path, vocab_path):
    """Load either model family and verify it matches the vocabulary."""
    vocab = Vocabulary.load(vocab_path)
    magic = Path(checkpoint_path).open("rb").read(4)
    if magic == CHECKPOINT_MAGIC:
        checkpoint = load_checkpoint(checkpoint_path, expected_vocab_hash=vocab.content_hash())
        return checkpoint.model, vocab
    if magic == NGRAM_MAGIC:
        model = NGramModel.load(checkpoint_path)
        if model.vocab_size != vocab.size:
            raise NGramError(
                f"{checkpoint_path}: model vocabulary size {model.vocab_size} "
                f"does not match served vocabulary size {vocab.size}")
        return model, vocab
    raise ServerStartupError(f"{checkpoint_path}: unrecognized model file magic {magic!r}")


class SuggestionService:
    """Request handling, independent of the HTTP plumbing."""

    def __init__(self, model, vocab: Vocabulary,
                 profile: LanguageProfile = JAVA_PROFILE, max_k: int = DEFAULT_MAX_K):
        self.model = model
        self.vocab = vocab
        self.profile = profile
        self.max_k = max_k

    def health(self) -> dict:
        return {
            "status": "ok",
            "model_kind": self.model.kind,
            "vocab_size": self.vocab.size,
            "context_len": self.model.context_len or 0,
        }

    def _context_ids(self, tokens: list[str]) -> list[int]:
        ids = [self.vocab.id_of(tok) for tok in tokens]
        n = self.model.context_len
        if n is None:
            return ids
        ids = ids[-n:]
        return [PAD_ID] * (n - len(ids)) + ids

    def _lex_raw(self, raw_code: str) -> list[str]:
        text = standardize(raw_code, self.profile, filename="<request>", lenient=True)
        return tokenize(text, self.profile).tokens

    def suggest(self, payload) -> dict:
        if not isinstance(payload, dict):
            raise ProtocolError("request body must be a JSON object")
        k = payload.get("k", 10)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise ProtocolError("k must be a positive integer")
        if k > self.max_k:
            raise ProtocolError(f"k={k} out of range (server max is {self.max_k})")
        if "context" in payload:
            tokens = payload["context"]
            if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
                raise ProtocolError("context must be a list of token strings")
        elif "raw_code" in payload:
            if not isinstance(payload["raw_code"], str):
                raise ProtocolError("raw_code must be a string")
            tokens = self._lex_raw(payload["raw_code"])
        else:
            raise ProtocolError("request must carry either context or raw_code")

        ids = self._context_ids(tokens)
        start = time.perf_counter()
        ranked = self.model.predict_topk(ids, min(k + 1, self.vocab.size))
        latency_ms = (time.perf_counter() - start) * 1000.0

        kept = [(tid, p) for tid, p in ranked if tid != PAD_ID][:k]
        ordinary = [(tid, p) for tid, p in kept if tid != UNK_ID]
        demoted = [(tid, p) for tid, p in kept if tid == UNK_ID]
        suggestions = [
            {"token": UNK_LABEL if tid == UNK_ID else self.vocab.token_of(tid),
             "probability": float(p),
             "rank": rank}
            for rank, (tid, p) in enumerate(ordinary + demoted, start=1)
        ]
        return {
            "suggestions": suggestions,
            "model_kind": self.model.kind,
            "latency_ms": latency_ms,
        }

    def tokenize_request(self, payload) -> dict:
        if not isinstance(payload, dict) or not isinstance(payload.get("raw_code"), str):
            raise ProtocolError("request must carry raw_code as a string")
        return {"tokens": self._lex_raw(payload["raw_code"])}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> SuggestionService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet; latency tests hammer the server
        pass

    def handle_one_request(self):
        # counted so shutdown can drain requests that are mid-flight
        # (idle keep-alive connections do not count)
        server = self.server
        try:
            super().handle_one_request()
        finally:
            if getattr(self, "_counted", False):
                with server._lock:
                    server._in_flight -= 1
                self._counted = False

    def parse_request(self):
        ok = super().parse_request()
        if ok:
            with self.server._lock:
                self.server._in_flight += 1
            self._counted = True
        return ok

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"invalid JSON body: {exc}") from exc

    def do_GET(self):
        if self.path == "/v1/health":
            self._send_json(200, self.service.health())
        else:
            self._send_json(404, {"error": f"no such endpoint: {self.path}"})

    def do_POST(self):
        try:
            payload = self._read_json()
            if self.path == "/v1/suggest":
                self._send_json(200, self.service.suggest(payload))
            elif self.path == "/v1/tokenize":
                self._send_json(200, self.service.tokenize_request(payload))
            else:
                self._send_json(404, {"error": f"no such endpoint: {self.path}"})
        except ProtocolError as exc:
            self._send_json(400, {"error": str(exc)})


class SuggestionServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, bind: str, service: SuggestionService):
        host, _, port = bind.rpartition(":")
        if not host or not port.isdigit():
            raise ServerStartupError(f"bind address {bind!r} must look like host:port")
        self.service = service
        self._in_flight = 0
        self._lock = threading.Lock()
        super().__init__((host, int(port)), _Handler)

    @property
    def bound_address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def drain(self, timeout: float = 5.0) -> None:
        """Wait for mid-flight requests to finish after the accept loop stops."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if self._in_flight == 0:
                    return
            time.sleep(0.01)


class _ShutdownSignal(Exception):
    pass


def serve(checkpoint_path, vocab_path, bind: str = DEFAULT_BIND,
          max_k: int = DEFAULT_MAX_K, profile: LanguageProfile = JAVA_PROFILE) -> None:
    """Load the model, bind, and answer requests until SIGINT/SIGTERM."""
    model, vocab = load_served_model(checkpoint_path, vocab_path)
    service = SuggestionService(model, vocab, profile=profile, max_k=max_k)
    server = SuggestionServer(bind, service)

    def stop(signum, frame):
        raise _ShutdownSignal

    signal.signal(signal.SIGINT, stop)
    signal.signal(signal.SIGTERM, stop)
    print(f"codeseer server: {model.kind} model, vocabulary {vocab.size}, "
          f"listening on {server.bound_address}", flush=True)
    try:
        server.serve_forever()
    except _ShutdownSignal:
        pass
    finally:
        server.drain()
        server.server_close()
