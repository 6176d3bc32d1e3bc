"""Deterministic textual encoding for records, spans, traces, and reports.

Object keys are emitted in lexicographic byte order with no insignificant
whitespace; integers are unpadded and non-integer numbers use the shortest
round-trip decimal form. Parsing a serialized record yields an equal record.
"""

from __future__ import annotations

import json
from decimal import Decimal
from typing import Any

from .model import Record, Span, Trace


def _jsonable_default(value: Any) -> Any:
    if isinstance(value, Decimal):
        return float(value)
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if hasattr(value, "to_wire"):
        return value.to_wire()
    raise TypeError(f"cannot canonically serialize {type(value).__name__}")


def canonical_serialize(value: Trace | Span | Record | dict | list | Any) -> str:
    """Encode a value as one line of canonical JSON (no trailing newline)."""
    if isinstance(value, (Trace, Span)):
        obj: Any = value.to_dict()
    elif hasattr(value, "to_wire"):
        obj = value.to_wire()
    elif hasattr(value, "to_dict"):
        obj = value.to_dict()
    else:
        obj = value
    return json.dumps(
        obj,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
        default=_jsonable_default,
    )


def canonical_lines(values: Any) -> str:
    """Serialize an iterable of values as LF-terminated canonical lines."""
    return "".join(canonical_serialize(v) + "\n" for v in values)
