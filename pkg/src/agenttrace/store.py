"""Append-only persistence plus trace retrieval, queries, and registries.

The wire format doubles as the durable format: records land in
``segments/NNNNNN.ndjson`` in canonical form, one per line, in arrival
order. The in-memory index keyed by trace_id is derived state, rebuilt by
a full scan on startup. Prompts live in ``prompts.ndjson`` beside the
segments. Nothing here ever mutates or deletes a stored record.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable

from .canonical import canonical_serialize
from .errors import (
    EmptyName,
    MalformedRecord,
    SpanNotFound,
    StorageError,
    TraceNotFound,
)
from .model import (
    FeedbackRecord,
    FeedbackScore,
    Record,
    Span,
    SpanKind,
    Trace,
    assemble_trace,
    parse_record,
)

SEGMENT_DIR = "segments"
PROMPTS_FILE = "prompts.ndjson"
DEFAULT_MAX_SEGMENT_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class TraceSummary:
    trace_id: str
    root_name: str
    root_kind: str
    start_time_unix_ns: int
    duration_ns: int | None
    span_count: int
    has_error: bool
    input_tokens: int
    output_tokens: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "root_name": self.root_name,
            "root_kind": self.root_kind,
            "start_time_unix_ns": self.start_time_unix_ns,
            "duration_ns": self.duration_ns,
            "span_count": self.span_count,
            "has_error": self.has_error,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
        }


@dataclass(frozen=True)
class QueryFilter:
    """Conjunction of optional conditions over trace summaries."""

    has_error: bool | None = None
    min_duration_ns: int | None = None
    kind: str | None = None
    name_contains: str | None = None
    since_unix_ns: int | None = None
    until_unix_ns: int | None = None

    def matches(self, summary: TraceSummary) -> bool:
        if self.has_error is not None and summary.has_error != self.has_error:
            return False
        if self.min_duration_ns is not None and (
            summary.duration_ns is None or summary.duration_ns < self.min_duration_ns
        ):
            return False
        if self.kind is not None and summary.root_kind != self.kind:
            return False
        if (
            self.name_contains is not None
            and self.name_contains not in summary.root_name
        ):
            return False
        if (
            self.since_unix_ns is not None
            and summary.start_time_unix_ns < self.since_unix_ns
        ):
            return False
        if (
            self.until_unix_ns is not None
            and summary.start_time_unix_ns >= self.until_unix_ns
        ):
            return False
        return True


@dataclass(frozen=True)
class PromptRecord:
    name: str
    version: int
    template: str
    content_hash: str
    created_time_unix_ns: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "version": self.version,
            "template": self.template,
            "content_hash": self.content_hash,
            "created_time_unix_ns": self.created_time_unix_ns,
        }


def _token_total(span: Span, key: str) -> int:
    value = span.metrics.get(key, 0)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return 0
    return int(value)


def summarize_trace(trace: Trace) -> TraceSummary:
    """Reduce one trace to its summary row (root, duration, errors, tokens)."""
    if trace.root_span_ids:
        root: Span | None = trace.spans[trace.root_span_ids[0]]
    elif trace.spans:
        # Non-conforming trace without a null-parent span: fall back to the
        # earliest span so the trace still shows up in listings.
        root = min(
            trace.spans.values(), key=lambda s: (s.start_time_unix_ns, s.span_id)
        )
    else:
        root = None
    input_tokens = 0
    output_tokens = 0
    has_error = False
    for span in trace.spans.values():
        if span.status == "error":
            has_error = True
        if span.kind is SpanKind.LLM:
            input_tokens += _token_total(span, "input_tokens")
            output_tokens += _token_total(span, "output_tokens")
    return TraceSummary(
        trace_id=trace.trace_id,
        root_name=root.name if root else "",
        root_kind=root.kind.value if root else "",
        start_time_unix_ns=root.start_time_unix_ns if root else 0,
        duration_ns=root.duration_ns if root else None,
        span_count=len(trace.spans),
        has_error=has_error,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
    )


def prompt_content_hash(template: str) -> str:
    return "sha256:" + hashlib.sha256(template.encode("utf-8")).hexdigest()


class Store:
    """Single-writer, many-reader record store rooted at a data directory."""

    def __init__(
        self,
        data_dir: str | Path,
        max_segment_bytes: int = DEFAULT_MAX_SEGMENT_BYTES,
        now_ns: Callable[[], int] = time.time_ns,
    ):
        self._data_dir = Path(data_dir)
        self._segments_dir = self._data_dir / SEGMENT_DIR
        self._prompts_path = self._data_dir / PROMPTS_FILE
        self._max_segment_bytes = max_segment_bytes
        self._now_ns = now_ns
        self._lock = threading.Lock()
        self._index: dict[str, list[Record]] = {}
        self._prompts: dict[str, list[PromptRecord]] = {}
        self._handle = None
        try:
            self._segments_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create data directory: {exc}") from exc
        self._segment_number = 0
        self._segment_size = 0
        self._load()

    # -- lifecycle ----------------------------------------------------------

    def _load(self) -> None:
        for path in sorted(self._segments_dir.glob("*.ndjson")):
            try:
                number = int(path.stem)
            except ValueError:
                continue
            self._segment_number = max(self._segment_number, number)
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    for line_no, line in enumerate(handle, start=1):
                        if not line.strip():
                            continue
                        try:
                            record = parse_record(line)
                        except MalformedRecord as exc:
                            raise StorageError(
                                f"corrupt segment {path.name}:{line_no}: {exc.reason}"
                            ) from exc
                        self._index.setdefault(record.trace_id, []).append(record)
            except OSError as exc:
                raise StorageError(f"cannot read segment {path}: {exc}") from exc
        if self._segment_number:
            current = self._segment_path(self._segment_number)
            self._segment_size = current.stat().st_size
        if self._prompts_path.exists():
            with open(self._prompts_path, "r", encoding="utf-8") as handle:
                for line_no, line in enumerate(handle, start=1):
                    if not line.strip():
                        continue
                    try:
                        obj = json.loads(line)
                        record = PromptRecord(
                            name=obj["name"],
                            version=obj["version"],
                            template=obj["template"],
                            content_hash=obj["content_hash"],
                            created_time_unix_ns=obj["created_time_unix_ns"],
                        )
                    except (ValueError, KeyError, TypeError) as exc:
                        raise StorageError(
                            f"corrupt prompt registry line {line_no}: {exc}"
                        ) from exc
                    self._prompts.setdefault(record.name, []).append(record)
            for versions in self._prompts.values():
                versions.sort(key=lambda p: p.version)

    def _segment_path(self, number: int) -> Path:
        return self._segments_dir / f"{number:06d}.ndjson"

    def _writer(self):
        if self._segment_number == 0 or (
            self._segment_size >= self._max_segment_bytes
        ):
            if self._handle is not None:
                self._handle.close()
                self._handle = None
            self._segment_number += 1
            self._segment_size = 0
        if self._handle is None:
            self._handle = open(
                self._segment_path(self._segment_number), "a", encoding="utf-8"
            )
        return self._handle

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- records ------------------------------------------------------------

    @property
    def data_dir(self) -> Path:
        return self._data_dir

    def append(self, records: Iterable[Record]) -> int:
        """Durably append records in arrival order; returns the count."""
        records = list(records)
        if not records:
            return 0
        payload = "".join(canonical_serialize(r) + "\n" for r in records)
        with self._lock:
            try:
                handle = self._writer()
                handle.write(payload)
                handle.flush()
            except OSError as exc:
                raise StorageError(f"append failed: {exc}") from exc
            self._segment_size += len(payload.encode("utf-8"))
            for record in records:
                self._index.setdefault(record.trace_id, []).append(record)
        return len(records)

    def trace_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._index)

    def _records_for(self, trace_id: str) -> list[Record]:
        with self._lock:
            records = self._index.get(trace_id)
            if not records:
                raise TraceNotFound(f"no records for trace {trace_id}")
            return list(records)

    def get_trace(self, trace_id: str) -> Trace:
        """Assemble the stored records of one trace, feedback included."""
        return assemble_trace(self._records_for(trace_id))

    def all_traces(self) -> list[Trace]:
        return [self.get_trace(tid) for tid in self.trace_ids()]

    def query_traces(self, query: QueryFilter | None = None) -> list[TraceSummary]:
        """Summaries matching every set filter, by start time then trace_id."""
        query = query or QueryFilter()
        summaries = [summarize_trace(t) for t in self.all_traces()]
        matched = [s for s in summaries if query.matches(s)]
        matched.sort(key=lambda s: (s.start_time_unix_ns, s.trace_id))
        return matched

    # -- prompt registry ------------------------------------------------------

    def register_prompt(self, name: str, template: str) -> PromptRecord:
        """Version a prompt template; identical content reuses its version."""
        if not name:
            raise EmptyName("prompt name must be non-empty")
        digest = prompt_content_hash(template)
        with self._lock:
            versions = self._prompts.setdefault(name, [])
            for existing in versions:
                if existing.content_hash == digest:
                    return existing
            record = PromptRecord(
                name=name,
                version=len(versions) + 1,
                template=template,
                content_hash=digest,
                created_time_unix_ns=self._now_ns(),
            )
            try:
                with open(self._prompts_path, "a", encoding="utf-8") as handle:
                    handle.write(canonical_serialize(record.to_dict()) + "\n")
                    handle.flush()
            except OSError as exc:
                raise StorageError(f"prompt append failed: {exc}") from exc
            versions.append(record)
            return record

    def list_prompts(self, name: str | None = None) -> list[PromptRecord]:
        with self._lock:
            if name is not None:
                return list(self._prompts.get(name, []))
            out: list[PromptRecord] = []
            for key in sorted(self._prompts):
                out.extend(self._prompts[key])
            return out

    # -- feedback -------------------------------------------------------------

    def attach_feedback(self, score: FeedbackScore) -> None:
        """Store a feedback score against an existing trace (and span).

        Raises:
            TraceNotFound / SpanNotFound: the referenced target is absent.
        """
        with self._lock:
            records = self._index.get(score.trace_id)
            if not records:
                raise TraceNotFound(f"no records for trace {score.trace_id}")
            if score.span_id is not None:
                started = {
                    r.span_id for r in records if r.record_type == "span_start"
                }
                if score.span_id not in started:
                    raise SpanNotFound(
                        f"span {score.span_id} not in trace {score.trace_id}"
                    )
        self.append(
            [
                FeedbackRecord(
                    trace_id=score.trace_id,
                    source=score.source,
                    name=score.name,
                    value=score.value,
                    time_unix_ns=score.time_unix_ns,
                    span_id=score.span_id,
                    comment=score.comment,
                )
            ]
        )
