"""Ingest screening and the HTTP collector endpoints."""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request

import pytest

from agenttrace.canonical import canonical_serialize
from agenttrace.collector import (
    CollectorConfig,
    CollectorService,
    make_server,
)
from agenttrace.errors import BodyTooLarge
from agenttrace.simulator import ShapeConfig, generate
from agenttrace.store import Store

from helpers import TRACE_ID, taxonomy_records

VALID_LINE = (
    '{"record_type":"event","trace_id":"%s","span_id":"00000000000000a1",'
    '"time_unix_ns":1,"name":"e","attributes":{}}' % TRACE_ID
)


@pytest.fixture
def service(store):
    return CollectorService(store)


def test_ingest_two_valid_lines(service):
    summary = service.ingest_bytes(f"{VALID_LINE}\n{VALID_LINE}\n".encode())
    assert summary.accepted == 2
    assert summary.rejected == 0
    assert summary.rejects == []


def test_ingest_partial_acceptance(service):
    body = f"{VALID_LINE}\nnot json\n".encode()
    summary = service.ingest_bytes(body)
    assert summary.accepted == 1
    assert summary.rejected == 1
    assert summary.rejects[0].line_number == 2
    # the valid record still made it to the store
    assert service.store.trace_ids() == [TRACE_ID]


def test_ingest_empty_body(service):
    summary = service.ingest_bytes(b"")
    assert summary.accepted == 0
    assert summary.rejected == 0


def test_ingest_blank_lines_not_counted(service):
    body = f"\n\n{VALID_LINE}\n   \n".encode()
    summary = service.ingest_bytes(body)
    assert summary.accepted == 1
    assert summary.rejected == 0


def test_ingest_line_too_long(store):
    service = CollectorService(store, max_line_bytes=64)
    summary = service.ingest_bytes(f"{VALID_LINE}\n".encode())
    assert summary.accepted == 0
    assert summary.rejected == 1
    assert "exceeds" in summary.rejects[0].reason


def test_ingest_body_too_large(store):
    service = CollectorService(store, max_body_bytes=16)
    with pytest.raises(BodyTooLarge):
        service.ingest_bytes(b"x" * 17)


def test_ingest_invalid_utf8_line(service):
    summary = service.ingest_bytes(b"\xff\xfe\n" + VALID_LINE.encode() + b"\n")
    assert summary.accepted == 1
    assert summary.rejected == 1
    assert summary.rejects[0].reason == "invalid UTF-8"


def test_accepted_plus_rejected_equals_nonblank_lines(service, record_lines):
    lines = record_lines(taxonomy_records())
    body = (lines + "garbage\n\n{}\n").encode()
    nonblank = sum(1 for l in body.split(b"\n") if l.strip())
    summary = service.ingest_bytes(body)
    assert summary.accepted + summary.rejected == nonblank


# -- HTTP ---------------------------------------------------------------------


@pytest.fixture
def server(tmp_path):
    config = CollectorConfig(data_dir=tmp_path / "http-data", port=0)
    srv = make_server(config)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()
    srv.service.store.close()
    thread.join(timeout=5)


def _url(server, path):
    host, port = server.server_address[:2]
    return f"http://{host}:{port}{path}"


def _post(server, body: bytes):
    request = urllib.request.Request(
        _url(server, "/v1/traces"),
        data=body,
        headers={"Content-Type": "application/x-ndjson"},
        method="POST",
    )
    with urllib.request.urlopen(request) as response:
        return response.status, json.loads(response.read().decode())


def test_http_healthz(server):
    with urllib.request.urlopen(_url(server, "/healthz")) as response:
        assert response.status == 200
        assert response.read() == b"ok"


def test_http_post_traces(server, record_lines):
    status, payload = _post(server, record_lines(taxonomy_records()).encode())
    assert status == 200
    assert payload["accepted"] == len(taxonomy_records())
    assert payload["rejected"] == 0
    assert server.service.store.trace_ids() == [TRACE_ID]


def test_http_unknown_path_404(server):
    with pytest.raises(urllib.error.HTTPError) as excinfo:
        urllib.request.urlopen(_url(server, "/nope"))
    assert excinfo.value.code == 404


def test_http_body_too_large_413(tmp_path):
    config = CollectorConfig(data_dir=tmp_path / "small", port=0, max_body_bytes=128)
    srv = make_server(config)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            _post(srv, b"x" * 1024)
        assert excinfo.value.code == 413
    finally:
        srv.shutdown()
        srv.server_close()
        srv.service.store.close()
        thread.join(timeout=5)


def test_http_and_file_ingestion_yield_equal_store_contents(
    tmp_path, server, record_lines
):
    lines = "".join(record_lines(generate(ShapeConfig(seed=s))) for s in range(3))
    status, _ = _post(server, lines.encode())
    assert status == 200

    source = tmp_path / "corpus.ndjson"
    source.write_text(lines, encoding="utf-8")
    with Store(tmp_path / "file-data") as file_store:
        CollectorService(file_store).ingest_file(source)

    http_segments = sorted((server.service.store.data_dir / "segments").glob("*"))
    file_segments = sorted((tmp_path / "file-data" / "segments").glob("*"))
    http_bytes = b"".join(p.read_bytes() for p in http_segments)
    file_bytes = b"".join(p.read_bytes() for p in file_segments)
    assert http_bytes == file_bytes


def test_http_concurrent_clients_do_not_corrupt(server, record_lines):
    corpora = [record_lines(generate(ShapeConfig(seed=s))).encode() for s in range(6)]
    errors = []

    def post(body):
        try:
            status, payload = _post(server, body)
            assert status == 200 and payload["rejected"] == 0
        except Exception as exc:  # noqa: BLE001 (collected for the main thread)
            errors.append(exc)

    threads = [threading.Thread(target=post, args=(b,)) for b in corpora]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    store = server.service.store
    assert len(store.trace_ids()) == 6
    # per-trace record order from each connection is preserved
    for body in corpora:
        lines = [l for l in body.decode().splitlines() if l.strip()]
        trace_id = json.loads(lines[0])["trace_id"]
        stored = [canonical_serialize(r) for r in store._records_for(trace_id)]
        assert stored == lines
