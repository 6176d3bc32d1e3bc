"""agenttrace: observability stack for LLM-agent execution traces.

Records typed spans over an NDJSON wire format, validates assembled
traces against a structural rule catalog, stores records append-only,
and computes cost/latency/trajectory/guardrail reports.
"""

from .analytics import (
    AuditReport,
    CostBreakdown,
    LatencyStats,
    PriceTable,
    SimilarityResult,
    compute_cost,
    evaluation_rollup,
    extract_trajectory,
    guardrail_audit,
    latency_stats,
    trajectory_similarity,
)
from .canonical import canonical_serialize
from .collector import CollectorConfig, CollectorService, IngestSummary, make_server
from .errors import AgentTraceError, MalformedRecord
from .model import (
    EventRecord,
    FeedbackRecord,
    FeedbackScore,
    LinkRecord,
    Record,
    Relation,
    Span,
    SpanEndRecord,
    SpanKind,
    SpanStartRecord,
    Trace,
    assemble_trace,
    group_records_by_trace,
    new_span_id,
    new_trace_id,
    parse_record,
)
from .simulator import ShapeConfig, generate, generate_many, mutate
from .store import PromptRecord, QueryFilter, Store, TraceSummary, summarize_trace
from .validator import (
    RULE_IDS,
    ValidationReport,
    ValidatorConfig,
    explain_rule,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AgentTraceError",
    "AuditReport",
    "CollectorConfig",
    "CollectorService",
    "CostBreakdown",
    "EventRecord",
    "FeedbackRecord",
    "FeedbackScore",
    "IngestSummary",
    "LatencyStats",
    "LinkRecord",
    "MalformedRecord",
    "PriceTable",
    "PromptRecord",
    "QueryFilter",
    "Record",
    "Relation",
    "RULE_IDS",
    "ShapeConfig",
    "SimilarityResult",
    "Span",
    "SpanEndRecord",
    "SpanKind",
    "SpanStartRecord",
    "Store",
    "Trace",
    "TraceSummary",
    "ValidationReport",
    "ValidatorConfig",
    "assemble_trace",
    "canonical_serialize",
    "compute_cost",
    "evaluation_rollup",
    "explain_rule",
    "extract_trajectory",
    "generate",
    "generate_many",
    "group_records_by_trace",
    "guardrail_audit",
    "latency_stats",
    "make_server",
    "mutate",
    "new_span_id",
    "new_trace_id",
    "parse_record",
    "summarize_trace",
    "trajectory_similarity",
    "validate",
]
