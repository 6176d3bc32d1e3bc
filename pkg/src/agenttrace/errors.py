"""Exception types shared across the package."""

from __future__ import annotations


class AgentTraceError(Exception):
    """Base class for all errors raised by this package."""


class MalformedRecord(AgentTraceError):
    """A wire line could not be parsed into a record."""

    def __init__(self, reason: str, line_excerpt: str = ""):
        super().__init__(f"{reason}: {line_excerpt!r}" if line_excerpt else reason)
        self.reason = reason
        self.line_excerpt = line_excerpt


class MixedTraceIds(AgentTraceError):
    """Records passed to trace assembly carry more than one trace_id."""


class OrphanRecord(AgentTraceError):
    """An event/end/link record references a span that was never started."""


class DuplicateSpanStart(AgentTraceError):
    """Two span_start records share the same span_id."""


class DuplicateSpanEnd(AgentTraceError):
    """Two span_end records share the same span_id."""


class UnknownRule(AgentTraceError):
    """A rule_id outside the R01..R13 catalog was requested."""


class NotApplicable(AgentTraceError):
    """The trace lacks the structure needed to apply the requested mutation."""


class InvalidShape(AgentTraceError):
    """Simulator shape parameters are out of range."""


class TraceNotFound(AgentTraceError):
    """No stored records exist for the requested trace_id."""


class SpanNotFound(AgentTraceError):
    """The requested span_id does not exist in the trace."""


class NotAWorkflow(AgentTraceError):
    """The referenced span exists but is not a workflow span."""


class EmptyName(AgentTraceError):
    """A prompt was registered under an empty name."""


class EmptyInput(AgentTraceError):
    """An aggregation was asked to summarize an empty sample."""


class MissingPrice(AgentTraceError):
    """A trace references a model absent from the price table."""

    def __init__(self, model: str):
        super().__init__(f"no price entry for model {model!r}")
        self.model = model


class PriceTableError(AgentTraceError):
    """The price table file is malformed or carries negative prices."""


class BodyTooLarge(AgentTraceError):
    """An ingest body exceeds the configured size limit."""


class StorageError(AgentTraceError):
    """An I/O failure occurred while reading or writing the data directory."""
