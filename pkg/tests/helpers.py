"""Hand-built record fixtures shared across test modules.

The taxonomy fixture is constructed span by span, independent of the
simulator, so the two conforming-trace sources cross-check each other.
"""

from __future__ import annotations

from agenttrace.model import (
    ErrorInfo,
    EventRecord,
    FeedbackRecord,
    LinkRecord,
    Record,
    Relation,
    SpanEndRecord,
    SpanKind,
    SpanStartRecord,
)

TRACE_ID = "ab" * 16
OTHER_TRACE_ID = "cd" * 16

AGENT = "00000000000000a1"
REASONING = "00000000000000b1"
PLANNING = "00000000000000c1"
PLAN_LLM = "00000000000000d1"
WORKFLOW = "00000000000000e1"
TASK_1 = "00000000000000f1"
TASK_2 = "00000000000000f2"
TOOL_1 = "0000000000000a01"
TOOL_2 = "0000000000000a02"
TASK_LLM = "0000000000000a03"
EVALUATION = "0000000000000a04"
GUARDRAIL = "0000000000000a05"

BASE = 1_000_000_000_000


class TraceBuilder:
    """Monotone clock plus shorthand for one trace's records."""

    def __init__(self, trace_id: str = TRACE_ID, base: int = BASE):
        self.trace_id = trace_id
        self.now = base
        self.records: list[Record] = []

    def tick(self) -> int:
        self.now += 1_000
        return self.now

    def start(self, span_id, parent_id, name, kind, payload=None, inputs=None):
        self.records.append(
            SpanStartRecord(
                trace_id=self.trace_id,
                span_id=span_id,
                parent_id=parent_id,
                name=name,
                kind=kind,
                start_time_unix_ns=self.tick(),
                payload=payload or {},
                inputs=inputs,
            )
        )

    def end(self, span_id, status="ok", error=None, metrics=None, outputs=None):
        self.records.append(
            SpanEndRecord(
                trace_id=self.trace_id,
                span_id=span_id,
                end_time_unix_ns=self.tick(),
                status=status,
                error=error,
                metrics=metrics or {},
                outputs=outputs,
            )
        )

    def event(self, span_id, name, attributes=None):
        self.records.append(
            EventRecord(
                trace_id=self.trace_id,
                span_id=span_id,
                time_unix_ns=self.tick(),
                name=name,
                attributes=attributes or {},
            )
        )

    def status(self, span_id, state):
        self.event(span_id, "status", {"status": state})

    def link(self, span_id, relation, target=None, resource=None, target_trace=None):
        self.records.append(
            LinkRecord(
                trace_id=self.trace_id,
                span_id=span_id,
                relation=relation,
                target_trace_id=target_trace,
                target_span_id=target,
                resource=resource,
            )
        )

    def feedback(self, source, name, value, span_id=None, comment=None):
        self.records.append(
            FeedbackRecord(
                trace_id=self.trace_id,
                source=source,
                name=name,
                value=value,
                time_unix_ns=self.tick(),
                span_id=span_id,
                comment=comment,
            )
        )


def taxonomy_records() -> list[Record]:
    """One conforming trace with all nine kinds and every payload field set."""
    b = TraceBuilder()
    b.start(
        AGENT,
        None,
        "agent_run",
        SpanKind.AGENT,
        {"role": "coder", "persona": "terse"},
        inputs={"goal": "summarize the report"},
    )
    b.link(AGENT, Relation.USES_KNOWLEDGE_BASE, resource="kb://docs")
    b.link(
        AGENT,
        Relation.CALLS,
        target=TASK_1,
        target_trace=OTHER_TRACE_ID,
    )
    b.event(AGENT, "note", {"detail": "session opened"})

    b.start(
        REASONING,
        AGENT,
        "reason",
        SpanKind.REASONING,
        {
            "context": "user asked for a summary",
            "retrieved_knowledge": "style guide from kb://docs",
            "inference_rules": "prefer extractive summary",
            "outcome": "draft a two-step plan",
        },
    )
    b.end(REASONING)

    b.start(
        PLANNING,
        AGENT,
        "plan",
        SpanKind.PLANNING,
        {
            "goal": "summarize the report",
            "constraints": ["under 200 words", "no external calls"],
            "context": "fresh session",
            "historical_plans": ["plan-001"],
        },
    )
    b.link(REASONING, Relation.GENERATES, target=PLANNING)
    b.start(
        PLAN_LLM,
        PLANNING,
        "plan_llm",
        SpanKind.LLM,
        {
            "model_name": "orion-mini",
            "model_version": "2024.6",
            "parameters": {"temperature": 0.2, "max_tokens": 512},
            "prompt_name": "planner",
            "prompt_version": 1,
        },
        inputs={"prompt": "outline the steps"},
    )
    b.end(
        PLAN_LLM,
        metrics={"input_tokens": 120, "output_tokens": 40},
        outputs={"text": "two steps"},
    )
    b.end(PLANNING)

    b.start(
        WORKFLOW,
        AGENT,
        "workflow",
        SpanKind.WORKFLOW,
        {
            "task_dependencies": [[TASK_1, TASK_2]],
            "operational_context": "local sandbox",
            "past_execution_history": ["run-17"],
        },
    )
    b.link(PLANNING, Relation.REALIZED_BY, target=WORKFLOW)

    b.start(
        TASK_1,
        WORKFLOW,
        "collect",
        SpanKind.TASK,
        {"description": "collect the source material", "status": "completed"},
    )
    b.status(TASK_1, "pending")
    b.status(TASK_1, "in_progress")
    b.start(
        TOOL_1,
        TASK_1,
        "search",
        SpanKind.TOOL,
        {
            "tool_name": "search",
            "tool_version": "2.1",
            "configuration": {"timeout_s": 30},
        },
        inputs={"query": "quarterly report"},
    )
    b.end(TOOL_1, outputs={"result": "3 documents"})
    b.start(
        TASK_LLM,
        TASK_1,
        "task_llm",
        SpanKind.LLM,
        {
            "model_name": "orion-large",
            "model_version": "2024.7",
            "parameters": {"temperature": 0.0, "max_tokens": 256},
            "prompt_name": "summarizer",
            "prompt_version": 2,
        },
    )
    b.end(TASK_LLM, metrics={"input_tokens": 300, "output_tokens": 80})
    b.status(TASK_1, "completed")
    b.end(TASK_1, outputs={"summary": "sources ready"})

    b.start(
        TASK_2,
        WORKFLOW,
        "compose",
        SpanKind.TASK,
        {"description": "compose the summary", "status": "completed"},
    )
    b.status(TASK_2, "pending")
    b.status(TASK_2, "in_progress")
    b.start(
        TOOL_2,
        TASK_2,
        "calculator",
        SpanKind.TOOL,
        {
            "tool_name": "calculator",
            "tool_version": "1.0",
            "configuration": {"precision": 2},
        },
    )
    b.end(TOOL_2, outputs={"result": "totals"})
    b.status(TASK_2, "completed")
    b.end(TASK_2)
    b.end(WORKFLOW)

    b.start(
        EVALUATION,
        AGENT,
        "evaluation",
        SpanKind.EVALUATION,
        {
            "test_cases": ["happy-path", "empty-report"],
            "testing_metrics": {"accuracy_percent": 96},
            "testing_results": "summary matches the rubric",
            "eval_mode": "final_response",
        },
    )
    b.link(EVALUATION, Relation.ASSESSES, target=AGENT)
    b.end(EVALUATION)

    b.start(
        GUARDRAIL,
        AGENT,
        "guardrail",
        SpanKind.GUARDRAIL,
        {"actions": ["validation"], "targets": [TOOL_1]},
    )
    b.link(GUARDRAIL, Relation.MONITORS, target=TOOL_1)
    b.end(GUARDRAIL)

    b.feedback("explicit", "thumb", 1, span_id=AGENT, comment="solid summary")
    b.feedback("implicit", "time_on_page_ms", 5400)
    b.end(AGENT, outputs={"result": "summary delivered"})
    return b.records


def failing_tool_records(trace_id: str = TRACE_ID) -> list[Record]:
    """Minimal conforming trace whose tool span errors out."""
    b = TraceBuilder(trace_id)
    b.start(AGENT, None, "agent_run", SpanKind.AGENT, {"role": "coder"})
    b.start(REASONING, AGENT, "reason", SpanKind.REASONING, {})
    b.end(REASONING)
    b.start(PLANNING, AGENT, "plan", SpanKind.PLANNING, {"goal": "g"})
    b.link(REASONING, Relation.GENERATES, target=PLANNING)
    b.end(PLANNING)
    b.start(WORKFLOW, AGENT, "workflow", SpanKind.WORKFLOW, {})
    b.link(PLANNING, Relation.REALIZED_BY, target=WORKFLOW)
    b.start(TASK_1, WORKFLOW, "task", SpanKind.TASK, {"description": "run tool"})
    b.start(TOOL_1, TASK_1, "search", SpanKind.TOOL, {"tool_name": "search"})
    b.end(
        TOOL_1,
        status="error",
        error=ErrorInfo(type="Timeout", message="no response", traceback="trace"),
    )
    b.end(TASK_1)
    b.end(WORKFLOW)
    b.end(AGENT)
    return b.records
