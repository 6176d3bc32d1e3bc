"""Span taxonomy types, the NDJSON wire-record grammar, and trace assembly.

The wire format is newline-delimited JSON, one record per line, UTF-8.
Five record types exist: span_start, span_end, event, link, feedback.
Parsing is tolerant of unknown top-level and payload fields (they are
preserved verbatim); structural conformance is the validator's job.
"""

from __future__ import annotations

import json
import random
import secrets
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence, Union

from .errors import (
    DuplicateSpanEnd,
    DuplicateSpanStart,
    MalformedRecord,
    MixedTraceIds,
    OrphanRecord,
)

TRACE_ID_LEN = 32
SPAN_ID_LEN = 16

_HEX = "0123456789abcdef"
_ZERO_TRACE_ID = "0" * TRACE_ID_LEN
_ZERO_SPAN_ID = "0" * SPAN_ID_LEN


def is_valid_trace_id(value: Any) -> bool:
    """True for 32 lowercase-hex chars that are not all zero."""
    return (
        isinstance(value, str)
        and len(value) == TRACE_ID_LEN
        and not value.strip(_HEX)  # empty leftover means all chars are hex
        and value != _ZERO_TRACE_ID
    )


def is_valid_span_id(value: Any) -> bool:
    """True for 16 lowercase-hex chars that are not all zero."""
    return (
        isinstance(value, str)
        and len(value) == SPAN_ID_LEN
        and not value.strip(_HEX)
        and value != _ZERO_SPAN_ID
    )


def new_trace_id(rng: random.Random | None = None) -> str:
    """Generate a fresh trace id (16 random bytes, lowercase hex)."""
    while True:
        tid = f"{rng.getrandbits(128):032x}" if rng else secrets.token_hex(16)
        if tid != "0" * TRACE_ID_LEN:
            return tid


def new_span_id(rng: random.Random | None = None) -> str:
    """Generate a fresh span id (8 random bytes, lowercase hex)."""
    while True:
        sid = f"{rng.getrandbits(64):016x}" if rng else secrets.token_hex(8)
        if sid != "0" * SPAN_ID_LEN:
            return sid


class SpanKind(str, Enum):
    AGENT = "agent"
    REASONING = "reasoning"
    PLANNING = "planning"
    WORKFLOW = "workflow"
    TASK = "task"
    TOOL = "tool"
    EVALUATION = "evaluation"
    GUARDRAIL = "guardrail"
    LLM = "llm"


class Relation(str, Enum):
    GENERATES = "generates"
    REALIZED_BY = "realized_by"
    ASSESSES = "assesses"
    MONITORS = "monitors"
    USES_KNOWLEDGE_BASE = "uses_knowledge_base"
    CALLS = "calls"


TASK_STATUSES = ("pending", "in_progress", "completed", "failed")
EVAL_MODES = ("final_response", "single_step", "trajectory")

RECORD_TYPES = ("span_start", "span_end", "event", "link", "feedback")
SPAN_STATUSES = ("ok", "error")
FEEDBACK_SOURCES = ("explicit", "implicit")


@dataclass(frozen=True)
class FieldSpec:
    """Type and presence constraints for one payload field of a span kind."""

    type: str  # text | text_list | map | number_map | id_list | id_pair_list | int | enum
    required: bool = False
    choices: tuple[str, ...] = ()


# One home field per span-kind metadata attribute. Consumed by validator
# rule R13 and by the taxonomy schema tests.
PAYLOAD_SCHEMA: dict[SpanKind, dict[str, FieldSpec]] = {
    SpanKind.AGENT: {
        "role": FieldSpec("text"),
        "persona": FieldSpec("text"),
    },
    SpanKind.REASONING: {
        "context": FieldSpec("text"),
        "retrieved_knowledge": FieldSpec("text"),
        "inference_rules": FieldSpec("text"),
        "outcome": FieldSpec("text"),
    },
    SpanKind.PLANNING: {
        "goal": FieldSpec("text", required=True),
        "constraints": FieldSpec("text_list"),
        "context": FieldSpec("text"),
        "historical_plans": FieldSpec("text_list"),
    },
    SpanKind.WORKFLOW: {
        "task_dependencies": FieldSpec("id_pair_list"),
        "operational_context": FieldSpec("text"),
        "past_execution_history": FieldSpec("text_list"),
    },
    SpanKind.TASK: {
        "description": FieldSpec("text", required=True),
        "status": FieldSpec("enum", choices=TASK_STATUSES),
    },
    SpanKind.TOOL: {
        "tool_name": FieldSpec("text", required=True),
        "tool_version": FieldSpec("text"),
        "configuration": FieldSpec("map"),
    },
    SpanKind.EVALUATION: {
        "test_cases": FieldSpec("text_list"),
        "testing_metrics": FieldSpec("number_map"),
        "testing_results": FieldSpec("text"),
        "eval_mode": FieldSpec("enum", choices=EVAL_MODES),
    },
    SpanKind.GUARDRAIL: {
        "actions": FieldSpec("text_list"),
        "targets": FieldSpec("id_list"),
    },
    SpanKind.LLM: {
        "model_name": FieldSpec("text", required=True),
        "model_version": FieldSpec("text"),
        "parameters": FieldSpec("map"),
        "prompt_name": FieldSpec("text"),
        "prompt_version": FieldSpec("int"),
    },
}


@dataclass(frozen=True)
class ErrorInfo:
    type: str
    message: str
    traceback: str | None = None

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {"type": self.type, "message": self.message}
        if self.traceback is not None:
            wire["traceback"] = self.traceback
        return wire


@dataclass(frozen=True)
class SpanStartRecord:
    trace_id: str
    span_id: str
    parent_id: str | None
    name: str
    kind: SpanKind
    start_time_unix_ns: int
    payload: dict[str, Any] = field(default_factory=dict)
    inputs: Any = None
    extra: dict[str, Any] = field(default_factory=dict)

    record_type = "span_start"

    def to_wire(self) -> dict[str, Any]:
        wire = dict(self.extra)
        wire.update(
            record_type="span_start",
            trace_id=self.trace_id,
            span_id=self.span_id,
            parent_id=self.parent_id,
            name=self.name,
            kind=self.kind.value,
            start_time_unix_ns=self.start_time_unix_ns,
            payload=self.payload,
        )
        if self.inputs is not None:
            wire["inputs"] = self.inputs
        return wire


@dataclass(frozen=True)
class SpanEndRecord:
    trace_id: str
    span_id: str
    end_time_unix_ns: int
    status: str  # ok | error
    error: ErrorInfo | None = None
    metrics: dict[str, Any] = field(default_factory=dict)
    outputs: Any = None
    extra: dict[str, Any] = field(default_factory=dict)

    record_type = "span_end"

    def to_wire(self) -> dict[str, Any]:
        wire = dict(self.extra)
        wire.update(
            record_type="span_end",
            trace_id=self.trace_id,
            span_id=self.span_id,
            end_time_unix_ns=self.end_time_unix_ns,
            status=self.status,
            metrics=self.metrics,
        )
        if self.error is not None:
            wire["error"] = self.error.to_wire()
        if self.outputs is not None:
            wire["outputs"] = self.outputs
        return wire


@dataclass(frozen=True)
class EventRecord:
    trace_id: str
    span_id: str
    time_unix_ns: int
    name: str
    attributes: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    record_type = "event"

    def to_wire(self) -> dict[str, Any]:
        wire = dict(self.extra)
        wire.update(
            record_type="event",
            trace_id=self.trace_id,
            span_id=self.span_id,
            time_unix_ns=self.time_unix_ns,
            name=self.name,
            attributes=self.attributes,
        )
        return wire


@dataclass(frozen=True)
class LinkRecord:
    trace_id: str
    span_id: str
    relation: Relation
    target_trace_id: str | None = None
    target_span_id: str | None = None
    resource: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    record_type = "link"

    def to_wire(self) -> dict[str, Any]:
        wire = dict(self.extra)
        wire.update(
            record_type="link",
            trace_id=self.trace_id,
            span_id=self.span_id,
            relation=self.relation.value,
        )
        if self.target_trace_id is not None:
            wire["target_trace_id"] = self.target_trace_id
        if self.target_span_id is not None:
            wire["target_span_id"] = self.target_span_id
        if self.resource is not None:
            wire["resource"] = self.resource
        return wire


@dataclass(frozen=True)
class FeedbackRecord:
    trace_id: str
    source: str  # explicit | implicit
    name: str
    value: Any  # number or text
    time_unix_ns: int
    span_id: str | None = None
    comment: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    record_type = "feedback"

    def to_wire(self) -> dict[str, Any]:
        wire = dict(self.extra)
        wire.update(
            record_type="feedback",
            trace_id=self.trace_id,
            source=self.source,
            name=self.name,
            value=self.value,
            time_unix_ns=self.time_unix_ns,
        )
        if self.span_id is not None:
            wire["span_id"] = self.span_id
        if self.comment is not None:
            wire["comment"] = self.comment
        return wire


Record = Union[SpanStartRecord, SpanEndRecord, EventRecord, LinkRecord, FeedbackRecord]


@dataclass(frozen=True)
class SpanEvent:
    name: str
    time_unix_ns: int
    attributes: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "time_unix_ns": self.time_unix_ns,
            "attributes": self.attributes,
        }


@dataclass(frozen=True)
class SpanLink:
    relation: Relation
    target_trace_id: str | None = None
    target_span_id: str | None = None
    resource: str | None = None

    def sort_key(self) -> tuple[str, str, str, str]:
        return (
            self.relation.value,
            self.target_trace_id or "",
            self.target_span_id or "",
            self.resource or "",
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"relation": self.relation.value}
        if self.target_trace_id is not None:
            out["target_trace_id"] = self.target_trace_id
        if self.target_span_id is not None:
            out["target_span_id"] = self.target_span_id
        if self.resource is not None:
            out["resource"] = self.resource
        return out


@dataclass(frozen=True)
class FeedbackScore:
    trace_id: str
    source: str
    name: str
    value: Any
    time_unix_ns: int
    span_id: str | None = None
    comment: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "trace_id": self.trace_id,
            "source": self.source,
            "name": self.name,
            "value": self.value,
            "time_unix_ns": self.time_unix_ns,
        }
        if self.span_id is not None:
            out["span_id"] = self.span_id
        if self.comment is not None:
            out["comment"] = self.comment
        return out


@dataclass
class Span:
    """One timed, typed node of a trace tree, joined from its wire records."""

    span_id: str
    trace_id: str
    parent_id: str | None
    name: str
    kind: SpanKind
    start_time_unix_ns: int
    end_time_unix_ns: int | None = None
    duration_ns: int | None = None
    status: str | None = None
    error: ErrorInfo | None = None
    inputs: Any = None
    outputs: Any = None
    metrics: dict[str, Any] = field(default_factory=dict)
    events: list[SpanEvent] = field(default_factory=list)
    links: list[SpanLink] = field(default_factory=list)
    payload: dict[str, Any] = field(default_factory=dict)

    @property
    def ended(self) -> bool:
        return self.end_time_unix_ns is not None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "span_id": self.span_id,
            "trace_id": self.trace_id,
            "parent_id": self.parent_id,
            "name": self.name,
            "kind": self.kind.value,
            "start_time_unix_ns": self.start_time_unix_ns,
            "metrics": self.metrics,
            "events": [e.to_dict() for e in self.events],
            "links": [l.to_dict() for l in self.links],
            "payload": self.payload,
        }
        if self.end_time_unix_ns is not None:
            out["end_time_unix_ns"] = self.end_time_unix_ns
            out["duration_ns"] = self.duration_ns
        if self.status is not None:
            out["status"] = self.status
        if self.error is not None:
            out["error"] = self.error.to_wire()
        if self.inputs is not None:
            out["inputs"] = self.inputs
        if self.outputs is not None:
            out["outputs"] = self.outputs
        return out


@dataclass
class Trace:
    """A full recorded execution: spans keyed by id plus attached feedback."""

    trace_id: str
    spans: dict[str, Span]
    feedback: list[FeedbackScore] = field(default_factory=list)
    root_span_ids: list[str] = field(default_factory=list)

    def children_of(self, span_id: str | None) -> list[Span]:
        """Child spans ordered by (start time, span_id)."""
        kids = [s for s in self.spans.values() if s.parent_id == span_id]
        kids.sort(key=lambda s: (s.start_time_unix_ns, s.span_id))
        return kids

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "spans": {sid: s.to_dict() for sid, s in self.spans.items()},
            "feedback": [f.to_dict() for f in self.feedback],
            "root_span_ids": list(self.root_span_ids),
        }


# ---------------------------------------------------------------------------
# Parsing


def _fail(reason: str, line: str) -> MalformedRecord:
    excerpt = line if len(line) <= 120 else line[:117] + "..."
    return MalformedRecord(reason, excerpt)


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-finite number {name}")


# Shared decoder: rejects NaN/Infinity and skips per-call decoder setup.
_DECODER = json.JSONDecoder(parse_constant=_reject_constant)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _take_str(obj: dict, key: str, line: str, *, optional: bool = False) -> str | None:
    value = obj.get(key)
    if value is None:
        if optional:
            return None
        raise _fail(f"missing required field {key!r}", line)
    if not isinstance(value, str):
        raise _fail(f"field {key!r} must be text", line)
    return value


def _take_int(obj: dict, key: str, line: str) -> int:
    value = obj.get(key)
    if value is None:
        raise _fail(f"missing required field {key!r}", line)
    if not _is_int(value):
        raise _fail(f"field {key!r} must be an integer", line)
    return value


def _take_map(obj: dict, key: str, line: str) -> dict[str, Any]:
    value = obj.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise _fail(f"field {key!r} must be an object", line)
    return value


def _take_span_id(obj: dict, key: str, line: str, *, optional: bool = False) -> str | None:
    value = obj.get(key)
    if value is None:
        if optional:
            return None
        raise _fail(f"missing required field {key!r}", line)
    if not is_valid_span_id(value):
        raise _fail(f"field {key!r} is not a valid span id", line)
    return value


_START_KEYS = frozenset(
    "record_type trace_id span_id parent_id name kind start_time_unix_ns "
    "payload inputs".split()
)
_END_KEYS = frozenset(
    "record_type trace_id span_id end_time_unix_ns status error metrics "
    "outputs".split()
)
_EVENT_KEYS = frozenset(
    "record_type trace_id span_id time_unix_ns name attributes".split()
)
_LINK_KEYS = frozenset(
    "record_type trace_id span_id relation target_trace_id target_span_id "
    "resource".split()
)
_FEEDBACK_KEYS = frozenset(
    "record_type trace_id span_id source name value comment time_unix_ns".split()
)


def _extras(obj: dict[str, Any], known: frozenset[str]) -> dict[str, Any]:
    unknown = obj.keys() - known
    return {k: obj[k] for k in unknown} if unknown else {}


def parse_record(line: str) -> Record:
    """Parse one NDJSON wire line into a typed record.

    Unknown top-level fields are preserved in the record's ``extra`` map;
    unknown record types, span kinds, and bad id formats are rejected.

    Raises:
        MalformedRecord: invalid syntax, missing required field, bad id.
    """
    stripped = line.strip()
    if not stripped:
        raise _fail("empty line", line)
    try:
        obj = _DECODER.decode(stripped)
    except ValueError as exc:
        raise _fail(f"invalid JSON ({exc})", stripped) from None
    if not isinstance(obj, dict):
        raise _fail("record must be a JSON object", stripped)
    return parse_record_dict(obj, stripped)


def parse_record_dict(obj: dict[str, Any], line: str = "") -> Record:
    """Parse an already-decoded JSON object into a typed record."""
    record_type = obj.get("record_type")
    if record_type not in RECORD_TYPES:
        raise _fail(f"unknown record_type {record_type!r}", line)

    trace_id = obj.get("trace_id")
    if not is_valid_trace_id(trace_id):
        raise _fail("missing or invalid trace_id", line)

    if record_type == "span_start":
        span_id = _take_span_id(obj, "span_id", line)
        parent_id = _take_span_id(obj, "parent_id", line, optional=True)
        name = _take_str(obj, "name", line)
        kind_raw = _take_str(obj, "kind", line)
        try:
            kind = SpanKind(kind_raw)
        except ValueError:
            raise _fail(f"unknown span kind {kind_raw!r}", line) from None
        start = _take_int(obj, "start_time_unix_ns", line)
        payload = _take_map(obj, "payload", line)
        return SpanStartRecord(
            trace_id=trace_id,
            span_id=span_id,
            parent_id=parent_id,
            name=name,
            kind=kind,
            start_time_unix_ns=start,
            payload=payload,
            inputs=obj.get("inputs"),
            extra=_extras(obj, _START_KEYS),
        )

    if record_type == "span_end":
        span_id = _take_span_id(obj, "span_id", line)
        end = _take_int(obj, "end_time_unix_ns", line)
        status = _take_str(obj, "status", line)
        if status not in SPAN_STATUSES:
            raise _fail(f"unknown status {status!r}", line)
        error_obj = obj.get("error")
        error = None
        if error_obj is not None:
            if not isinstance(error_obj, dict):
                raise _fail("field 'error' must be an object", line)
            etype = error_obj.get("type")
            emsg = error_obj.get("message")
            if not isinstance(etype, str) or not etype or not isinstance(emsg, str) or not emsg:
                raise _fail("error requires non-empty 'type' and 'message'", line)
            etb = error_obj.get("traceback")
            if etb is not None and not isinstance(etb, str):
                raise _fail("error 'traceback' must be text", line)
            error = ErrorInfo(type=etype, message=emsg, traceback=etb)
        if status == "error" and error is None:
            raise _fail("status 'error' requires an 'error' object", line)
        metrics = _take_map(obj, "metrics", line)
        for mname, mval in metrics.items():
            if not _is_number(mval):
                raise _fail(f"metric {mname!r} must be a number", line)
        return SpanEndRecord(
            trace_id=trace_id,
            span_id=span_id,
            end_time_unix_ns=end,
            status=status,
            error=error,
            metrics=metrics,
            outputs=obj.get("outputs"),
            extra=_extras(obj, _END_KEYS),
        )

    if record_type == "event":
        span_id = _take_span_id(obj, "span_id", line)
        time_ns = _take_int(obj, "time_unix_ns", line)
        name = _take_str(obj, "name", line)
        attributes = _take_map(obj, "attributes", line)
        return EventRecord(
            trace_id=trace_id,
            span_id=span_id,
            time_unix_ns=time_ns,
            name=name,
            attributes=attributes,
            extra=_extras(obj, _EVENT_KEYS),
        )

    if record_type == "link":
        span_id = _take_span_id(obj, "span_id", line)
        relation_raw = _take_str(obj, "relation", line)
        try:
            relation = Relation(relation_raw)
        except ValueError:
            raise _fail(f"unknown relation {relation_raw!r}", line) from None
        target_trace_id = obj.get("target_trace_id")
        if target_trace_id is not None and not is_valid_trace_id(target_trace_id):
            raise _fail("field 'target_trace_id' is not a valid trace id", line)
        target_span_id = _take_span_id(obj, "target_span_id", line, optional=True)
        resource = _take_str(obj, "resource", line, optional=True)
        if (target_span_id is None) == (resource is None):
            raise _fail("link requires exactly one of target_span_id or resource", line)
        if resource == "":
            raise _fail("link 'resource' must be non-empty", line)
        return LinkRecord(
            trace_id=trace_id,
            span_id=span_id,
            relation=relation,
            target_trace_id=target_trace_id,
            target_span_id=target_span_id,
            resource=resource,
            extra=_extras(obj, _LINK_KEYS),
        )

    # feedback
    span_id = _take_span_id(obj, "span_id", line, optional=True)
    source = _take_str(obj, "source", line)
    if source not in FEEDBACK_SOURCES:
        raise _fail(f"unknown feedback source {source!r}", line)
    name = _take_str(obj, "name", line)
    value = obj.get("value")
    if value is None or not (isinstance(value, str) or _is_number(value)):
        raise _fail("feedback 'value' must be a number or text", line)
    comment = _take_str(obj, "comment", line, optional=True)
    time_ns = _take_int(obj, "time_unix_ns", line)
    return FeedbackRecord(
        trace_id=trace_id,
        source=source,
        name=name,
        value=value,
        time_unix_ns=time_ns,
        span_id=span_id,
        comment=comment,
        extra=_extras(obj, _FEEDBACK_KEYS),
    )


# ---------------------------------------------------------------------------
# Assembly


def group_records_by_trace(records: Iterable[Record]) -> dict[str, list[Record]]:
    """Split a mixed record stream into per-trace sequences (arrival order)."""
    groups: dict[str, list[Record]] = {}
    for record in records:
        groups.setdefault(record.trace_id, []).append(record)
    return groups


def assemble_trace(records: Sequence[Record]) -> Trace:
    """Join span_start/span_end records, attach events/links/feedback.

    Spans lacking a span_end remain open (no end time or duration). The
    result is order-insensitive in the input: events are sorted by time
    (ties keep arrival order), links by a canonical key, feedback by time.

    Raises:
        MixedTraceIds: records carry more than one trace_id.
        OrphanRecord: event/end/link for a span that was never started.
        DuplicateSpanStart / DuplicateSpanEnd: repeated span_id.
    """
    starts: dict[str, SpanStartRecord] = {}
    ends: dict[str, SpanEndRecord] = {}
    events: dict[str, list[EventRecord]] = {}
    links: dict[str, list[LinkRecord]] = {}
    feedback: list[FeedbackRecord] = []
    trace_id: str | None = None

    for record in records:
        if trace_id is None:
            trace_id = record.trace_id
        elif record.trace_id != trace_id:
            raise MixedTraceIds(
                f"records mix trace ids {trace_id} and {record.trace_id}"
            )
        if isinstance(record, SpanStartRecord):
            if record.span_id in starts:
                raise DuplicateSpanStart(f"span {record.span_id} started twice")
            starts[record.span_id] = record
        elif isinstance(record, SpanEndRecord):
            if record.span_id in ends:
                raise DuplicateSpanEnd(f"span {record.span_id} ended twice")
            ends[record.span_id] = record
        elif isinstance(record, EventRecord):
            events.setdefault(record.span_id, []).append(record)
        elif isinstance(record, LinkRecord):
            links.setdefault(record.span_id, []).append(record)
        else:
            feedback.append(record)

    if trace_id is None:
        raise MixedTraceIds("no records to assemble")

    for kind_name, mapping in (("span_end", ends), ("event", events), ("link", links)):
        for span_id in mapping:
            if span_id not in starts:
                raise OrphanRecord(
                    f"{kind_name} record for span {span_id} with no span_start"
                )

    spans: dict[str, Span] = {}
    for span_id, start in starts.items():
        end = ends.get(span_id)
        span_events = [
            SpanEvent(name=e.name, time_unix_ns=e.time_unix_ns, attributes=e.attributes)
            for e in sorted(events.get(span_id, []), key=lambda e: e.time_unix_ns)
        ]
        span_links = sorted(
            (
                SpanLink(
                    relation=l.relation,
                    target_trace_id=l.target_trace_id,
                    target_span_id=l.target_span_id,
                    resource=l.resource,
                )
                for l in links.get(span_id, [])
            ),
            key=SpanLink.sort_key,
        )
        spans[span_id] = Span(
            span_id=span_id,
            trace_id=trace_id,
            parent_id=start.parent_id,
            name=start.name,
            kind=start.kind,
            start_time_unix_ns=start.start_time_unix_ns,
            end_time_unix_ns=end.end_time_unix_ns if end else None,
            duration_ns=(end.end_time_unix_ns - start.start_time_unix_ns) if end else None,
            status=end.status if end else None,
            error=end.error if end else None,
            inputs=start.inputs,
            outputs=end.outputs if end else None,
            metrics=end.metrics if end else {},
            events=span_events,
            links=span_links,
            payload=start.payload,
        )

    roots = sorted(
        (s for s in spans.values() if s.parent_id is None),
        key=lambda s: (s.start_time_unix_ns, s.span_id),
    )
    scores = [
        FeedbackScore(
            trace_id=f.trace_id,
            source=f.source,
            name=f.name,
            value=f.value,
            time_unix_ns=f.time_unix_ns,
            span_id=f.span_id,
            comment=f.comment,
        )
        for f in sorted(feedback, key=lambda f: f.time_unix_ns)
    ]
    return Trace(
        trace_id=trace_id,
        spans=spans,
        feedback=scores,
        root_span_ids=[s.span_id for s in roots],
    )
