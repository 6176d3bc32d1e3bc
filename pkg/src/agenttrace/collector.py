"""Ingestion service: parse-level screening of NDJSON record streams.

One screening path backs both transports, so ingesting a file via the CLI
and POSTing the same bytes to the HTTP endpoint leave identical store
contents. Acceptance is per line: a malformed line is reported and
skipped, never failing the batch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Iterable

from .canonical import canonical_serialize
from .errors import BodyTooLarge, MalformedRecord, StorageError
from .model import parse_record
from .store import Store

DEFAULT_PORT = 4318
DEFAULT_MAX_BODY_BYTES = 16 * 1024 * 1024
DEFAULT_MAX_LINE_BYTES = 1 * 1024 * 1024

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CollectorConfig:
    data_dir: str | Path
    host: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES
    max_line_bytes: int = DEFAULT_MAX_LINE_BYTES

    def __post_init__(self) -> None:
        if self.max_body_bytes <= 0 or self.max_line_bytes <= 0:
            raise ValueError("size limits must be > 0")


@dataclass(frozen=True)
class RejectedLine:
    line_number: int
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {"line_number": self.line_number, "reason": self.reason}


@dataclass
class IngestSummary:
    accepted: int = 0
    rejected: int = 0
    rejects: list[RejectedLine] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "rejects": [r.to_dict() for r in self.rejects],
        }


class CollectorService:
    """Screens record lines and appends the parseable ones to the store."""

    def __init__(
        self,
        store: Store,
        max_body_bytes: int = DEFAULT_MAX_BODY_BYTES,
        max_line_bytes: int = DEFAULT_MAX_LINE_BYTES,
    ):
        self.store = store
        self.max_body_bytes = max_body_bytes
        self.max_line_bytes = max_line_bytes

    def _screen(self, lines: Iterable[bytes]) -> IngestSummary:
        summary = IngestSummary()
        accepted = []
        for line_number, raw in enumerate(lines, start=1):
            if not raw.strip():
                continue  # blank lines are neither accepted nor rejected
            if len(raw) > self.max_line_bytes:
                summary.rejected += 1
                summary.rejects.append(
                    RejectedLine(line_number, f"line exceeds {self.max_line_bytes} bytes")
                )
                continue
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError:
                summary.rejected += 1
                summary.rejects.append(RejectedLine(line_number, "invalid UTF-8"))
                continue
            try:
                accepted.append(parse_record(text))
            except MalformedRecord as exc:
                summary.rejected += 1
                summary.rejects.append(RejectedLine(line_number, exc.reason))
        summary.accepted = len(accepted)
        self.store.append(accepted)
        return summary

    def ingest_bytes(self, body: bytes) -> IngestSummary:
        """Screen one request body; appends survivors in arrival order."""
        if len(body) > self.max_body_bytes:
            raise BodyTooLarge(
                f"body of {len(body)} bytes exceeds limit {self.max_body_bytes}"
            )
        return self._screen(body.split(b"\n"))

    def ingest_file(self, path: str | Path) -> IngestSummary:
        """Screen a local NDJSON file (no body-size cap on the file path)."""
        try:
            with open(path, "rb") as handle:
                return self._screen(handle.read().split(b"\n"))
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc


class _CollectorHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: CollectorService  # set on the server class

    def _respond(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _respond_json(self, status: int, payload: Any) -> None:
        body = canonical_serialize(payload).encode("utf-8") + b"\n"
        self._respond(status, body, "application/json")

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        if self.path == "/healthz":
            self._respond(200, b"ok", "text/plain")
        else:
            self._respond_json(404, {"error": "not found"})

    def do_POST(self) -> None:  # noqa: N802
        # error paths leave the body unread, so the connection must close
        if self.path != "/v1/traces":
            self.close_connection = True
            self._respond_json(404, {"error": "not found"})
            return
        raw_length = self.headers.get("Content-Length")
        if raw_length is None:
            self.close_connection = True
            self._respond_json(411, {"error": "Content-Length required"})
            return
        try:
            length = int(raw_length)
            if length < 0:
                raise ValueError(raw_length)
        except ValueError:
            self.close_connection = True
            self._respond_json(400, {"error": "bad Content-Length"})
            return
        service = self.server.service  # type: ignore[attr-defined]
        if length > service.max_body_bytes:
            self.close_connection = True
            self._respond_json(413, {"error": "BodyTooLarge"})
            return
        body = self.rfile.read(length)
        try:
            summary = service.ingest_bytes(body)
        except BodyTooLarge:
            self._respond_json(413, {"error": "BodyTooLarge"})
            return
        except StorageError as exc:
            self._respond_json(500, {"error": str(exc)})
            return
        self._respond_json(200, summary)

    def log_message(self, fmt: str, *args: Any) -> None:
        logger.debug("%s %s", self.address_string(), fmt % args)


class CollectorServer(ThreadingHTTPServer):
    daemon_threads = True
    service: CollectorService


def make_server(config: CollectorConfig, store: Store | None = None) -> CollectorServer:
    """Bind the collector; the caller drives serve_forever()/shutdown()."""
    own_store = store or Store(config.data_dir)
    try:
        server = CollectorServer((config.host, config.port), _CollectorHandler)
    except OSError as exc:
        if store is None:
            own_store.close()
        raise StorageError(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    server.service = CollectorService(
        own_store,
        max_body_bytes=config.max_body_bytes,
        max_line_bytes=config.max_line_bytes,
    )
    return server
