"""HTTP inference service.

``POST /v1/analyze`` takes raw PNG/JPEG bytes as the request body and
returns the same canonical JSON as ``salientcrop analyze --json``.
``GET /v1/health`` reports liveness and model shape. The loaded vocabulary
and model are never mutated, so requests run concurrently without locks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .errors import DecodeError, ImageTooSmall
from .pipeline import analyze_bytes, canonical_json

logger = logging.getLogger(__name__)

MAX_UPLOAD_BYTES = 16 * 1024 * 1024
ACCEPTED_TYPES = {"", "image/png", "image/jpeg", "image/jpg", "application/octet-stream"}
_DRAIN_CHUNK = 1 << 16


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    model_path: str = ""
    threshold: float | None = None
    tau: float | None = None
    max_upload_bytes: int = MAX_UPLOAD_BYTES
    timeout: float = 30.0


class AnalysisApp:
    """Request logic independent of the HTTP transport."""

    def __init__(self, vocab, model, params, max_upload_bytes: int = MAX_UPLOAD_BYTES):
        self.vocab = vocab
        self.model = model
        self.params = params
        self.max_upload_bytes = max_upload_bytes

    @classmethod
    def from_config(cls, config: ServiceConfig) -> AnalysisApp:
        from .cli import load_for_inference

        vocab, model, params = load_for_inference(config.model_path, config.threshold, config.tau)
        return cls(vocab, model, params, config.max_upload_bytes)

    def health(self) -> tuple[int, str]:
        return 200, canonical_json({"status": "ok", "model_k": self.vocab.k, "classes": self.model.M})

    def analyze(self, body: bytes, with_png: bool = False) -> tuple[int, str]:
        try:
            result = analyze_bytes(body, self.vocab, self.model, self.params)
        except DecodeError:
            return 400, canonical_json({"error": "decode"})
        except ImageTooSmall as exc:
            return 400, canonical_json({"error": "image_too_small", "detail": str(exc)})
        except Exception:  # noqa: BLE001
            logger.exception("analysis failed")
            return 500, canonical_json({"error": "internal"})
        return 200, result.to_json(with_png)


def _handler_class(app: AnalysisApp, timeout: float):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "salientcrop"

        def setup(self):
            self.timeout = timeout
            super().setup()

        def log_message(self, fmt, *args):
            logger.info("%s - " + fmt, self.address_string(), *args)

        def _send(self, status: int, body: str):
            payload = (body + "\n").encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _drain(self, length: int):
            remaining = length
            while remaining > 0:
                chunk = self.rfile.read(min(_DRAIN_CHUNK, remaining))
                if not chunk:
                    break
                remaining -= len(chunk)

        def do_GET(self):
            path = urlsplit(self.path).path
            if path == "/v1/health":
                self._send(*app.health())
            else:
                self._send(404, canonical_json({"error": "not_found"}))

        def do_POST(self):
            parts = urlsplit(self.path)
            length_header = self.headers.get("Content-Length")
            length = int(length_header) if length_header and length_header.isdigit() else None
            if parts.path != "/v1/analyze":
                if length:
                    self._drain(length)
                self._send(404, canonical_json({"error": "not_found"}))
                return
            if length is None:
                self.close_connection = True
                self._send(411, canonical_json({"error": "length_required"}))
                return
            if length > app.max_upload_bytes:
                if length <= 4 * app.max_upload_bytes:
                    self._drain(length)
                else:
                    self.close_connection = True
                self._send(413, canonical_json({"error": "too_large", "limit": app.max_upload_bytes}))
                return
            body = self.rfile.read(length)
            ctype = (self.headers.get("Content-Type") or "").split(";")[0].strip().lower()
            if ctype not in ACCEPTED_TYPES:
                self._send(415, canonical_json({"error": "unsupported_media_type"}))
                return
            with_png = parse_qs(parts.query).get("crops", [""])[-1] == "png"
            self._send(*app.analyze(body, with_png))

    return Handler


def make_server(app: AnalysisApp, host: str = "127.0.0.1", port: int = 0, timeout: float = 30.0):
    """Bound but not yet serving; ``port=0`` picks a free port."""
    server = ThreadingHTTPServer((host, port), _handler_class(app, timeout))
    server.daemon_threads = True
    return server


def serve(config: ServiceConfig):
    app = AnalysisApp.from_config(config)
    server = make_server(app, config.host, config.port, config.timeout)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (k={app.vocab.k}, classes={app.model.M})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
