"""HTTP suggestion service.

POST /suggest takes the canonical JSON request body and answers with ranked
suggestions from the configured backend; GET /health reports liveness.
Requests are handled concurrently up to a bounded pool; beyond that they
queue. The four failure classes map to four distinct status codes: decode
failure 400, oversized body 413, backend unavailable or broken 503, backend
deadline 504.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .checking import check_batch
from .generation import (
    BackendProtocolError,
    BackendUnavailableError,
    DeadlineError,
    Generator,
    MockGenerator,
    MockRuleTable,
    RemoteBackendConfig,
    RemoteGenerator,
    score_normalize,
)
from .proofenv import EnvironmentIntegrityError, SimProver, SimProverTable
from .protocol import (
    DecodeError,
    Status,
    Suggestion,
    SuggestResponse,
    deserialize_request,
    serialize_response,
)

logger = logging.getLogger(__name__)

DEFAULT_BIND = "127.0.0.1:6550"


@dataclass(frozen=True)
class ServerConfig:
    """Server wiring. ``backend`` is ``mock:<rules.json>`` or ``remote:<url>``;
    ``check`` is empty (suggestions go out unchecked) or ``sim:<table.json>``."""

    bind: str = DEFAULT_BIND
    backend: str = ""
    model_id: str | None = None
    default_n: int = 5
    check: str = ""
    max_body_bytes: int = 1 << 20
    request_timeout_s: float = 30.0
    pool_size: int = 8

    def __post_init__(self):
        if self.default_n < 1:
            raise ValueError("default_n must be >= 1")
        if self.max_body_bytes < 4096:
            raise ValueError("max_body_bytes must be >= 4096")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bind must be host:port, got {self.bind!r}")
        return host, int(port)


def build_generator(config: ServerConfig) -> Generator:
    kind, _, arg = config.backend.partition(":")
    if kind == "mock":
        if not arg:
            raise ValueError("mock backend needs a rule table path: mock:<rules.json>")
        return MockGenerator(MockRuleTable.load(arg), model_id=config.model_id or "mock")
    if kind == "remote":
        if not arg:
            raise ValueError("remote backend needs an endpoint: remote:<url>")
        return RemoteGenerator(
            RemoteBackendConfig(
                endpoint_url=arg,
                model_id=config.model_id or "remote",
                request_timeout_s=config.request_timeout_s,
            )
        )
    raise ValueError(f"unknown backend {config.backend!r}; use mock:<path> or remote:<url>")


def build_check_env(config: ServerConfig) -> SimProver | None:
    if not config.check:
        return None
    kind, _, arg = config.check.partition(":")
    if kind != "sim" or not arg:
        raise ValueError(f"unknown check mode {config.check!r}; use sim:<table.json>")
    return SimProver(SimProverTable.load(arg))


class SuggestService:
    """Transport-independent request handling; the HTTP layer stays thin."""

    def __init__(self, config: ServerConfig, generator: Generator | None = None):
        self.config = config
        self.generator = generator if generator is not None else build_generator(config)
        self.check_env = build_check_env(config)
        self.backend_kind = config.backend.partition(":")[0] or type(self.generator).__name__
        self.started_at = time.monotonic()
        self._lock = threading.Lock()
        self._pool = threading.BoundedSemaphore(config.pool_size)
        self.requests_served = 0
        self.last_backend_error: str | None = None

    def handle_suggest(self, body: bytes) -> tuple[int, bytes]:
        """Returns (status code, response body)."""
        t0 = time.monotonic()
        with self._lock:
            self.requests_served += 1
        if len(body) > self.config.max_body_bytes:
            return 413, _error_body("body", "request body too large")
        try:
            request = deserialize_request(body, default_n=self.config.default_n)
        except DecodeError as exc:
            return 400, _error_body(exc.field, str(exc))

        try:
            with self._pool:
                candidates = self.generator.generate(
                    request.tactic_state, request.prefix, request.n
                )
        except DeadlineError as exc:
            self._note_backend_error(str(exc))
            return 504, _error_body("backend", str(exc))
        except (BackendUnavailableError, BackendProtocolError) as exc:
            self._note_backend_error(str(exc))
            return 503, _error_body("backend", str(exc))
        self._note_backend_error(None)

        suggestions = self._classify(request.tactic_state, candidates)[: request.n]
        latency_ms = int((time.monotonic() - t0) * 1000)
        response = SuggestResponse(
            suggestions=tuple(suggestions),
            model_id=self.generator.model_id,
            latency_ms=latency_ms,
        )
        return 200, serialize_response(response)

    def _classify(self, state, candidates) -> list[Suggestion]:
        if self.check_env is not None:
            try:
                return list(check_batch(self.check_env, state, candidates).suggestions)
            except EnvironmentIntegrityError:
                pass  # state unknown to the check table: fall back to unchecked
        return [
            Suggestion(tactic, score, Status.UNCHECKED)
            for tactic, score in score_normalize(candidates)
        ]

    def _note_backend_error(self, message: str | None) -> None:
        with self._lock:
            self.last_backend_error = message

    def handle_health(self) -> tuple[int, bytes]:
        with self._lock:
            served = self.requests_served
            degraded = self.last_backend_error is not None
        doc = {
            "status": "ok",
            "backend": self.backend_kind,
            "model_id": self.generator.model_id,
            "uptime_s": round(time.monotonic() - self.started_at, 3),
            "requests_served": served,
            "degraded": degraded,
        }
        return 200, json.dumps(doc, sort_keys=True).encode("utf-8")


def _error_body(field: str, message: str) -> bytes:
    return json.dumps({"error": field, "detail": message}, sort_keys=True).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: SuggestService  # set on the subclass by make_server

    def do_POST(self):
        if self.path != "/suggest":
            self._send(404, _error_body("path", f"no such endpoint: {self.path}"))
            return
        length_header = self.headers.get("Content-Length")
        try:
            length = int(length_header)
        except (TypeError, ValueError):
            self._send(400, _error_body("body", "missing or invalid Content-Length"))
            return
        if length > self.service.config.max_body_bytes:
            # do not read an oversized body; answer and drop the connection
            self._send(413, _error_body("body", "request body too large"), close=True)
            return
        body = self.rfile.read(length)
        status, payload = self.service.handle_suggest(body)
        self._send(status, payload)

    def do_GET(self):
        if self.path != "/health":
            self._send(404, _error_body("path", f"no such endpoint: {self.path}"))
            return
        status, payload = self.service.handle_health()
        self._send(status, payload)

    def _send(self, status: int, payload: bytes, close: bool = False):
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        if close:
            self.send_header("Connection", "close")
            self.close_connection = True
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):
        logger.debug("%s - %s", self.address_string(), fmt % args)


def make_server(config: ServerConfig, generator: Generator | None = None) -> ThreadingHTTPServer:
    """Bind the service; port 0 picks an ephemeral port (see .server_address)."""
    service = SuggestService(config, generator)
    handler = type("Handler", (_Handler,), {"service": service})
    host, port = config.host_port
    httpd = ThreadingHTTPServer((host, port), handler)
    httpd.daemon_threads = True
    return httpd


def serve(config: ServerConfig) -> None:
    """Run the server until interrupted."""
    httpd = make_server(config)
    host, port = httpd.server_address[:2]
    logger.info("serving on http://%s:%s (backend=%s)", host, port, config.backend)
    print(f"tacstep server listening on http://{host}:{port}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
