"""Monitoring, evaluation, and audit reports over assembled traces.

Monetary arithmetic runs on decimal values (exact for token counts and
price-table entries); floats appear only at the report boundary. All
aggregations here are pure functions and match a naive brute-force tally.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import EmptyInput, MissingPrice, NotAWorkflow, PriceTableError, SpanNotFound
from .model import Relation, Span, SpanKind, Trace


@dataclass(frozen=True)
class ModelPrice:
    input_per_1k: Decimal
    output_per_1k: Decimal


@dataclass(frozen=True)
class PriceTable:
    """Per-model token prices: {"currency": ..., "models": {name: {...}}}."""

    currency: str
    models: dict[str, ModelPrice]

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "PriceTable":
        if not isinstance(obj, dict) or not isinstance(obj.get("models"), dict):
            raise PriceTableError("price table requires a 'models' object")
        currency = obj.get("currency", "USD")
        if not isinstance(currency, str) or not currency:
            raise PriceTableError("'currency' must be non-empty text")
        models: dict[str, ModelPrice] = {}
        for name, entry in obj["models"].items():
            if not isinstance(entry, dict):
                raise PriceTableError(f"model {name!r} entry must be an object")
            try:
                inp = Decimal(str(entry["input_per_1k"]))
                out = Decimal(str(entry["output_per_1k"]))
            except (KeyError, ArithmeticError) as exc:
                raise PriceTableError(
                    f"model {name!r} needs numeric input_per_1k/output_per_1k"
                ) from exc
            if inp < 0 or out < 0:
                raise PriceTableError(f"model {name!r} has a negative price")
            models[name] = ModelPrice(inp, out)
        return cls(currency=currency, models=models)

    @classmethod
    def load(cls, path: str | Path) -> "PriceTable":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


@dataclass
class ModelCost:
    input_tokens: int = 0
    output_tokens: int = 0
    cost: Decimal = Decimal(0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cost": float(self.cost),
        }


@dataclass
class CostBreakdown:
    currency: str
    per_model: dict[str, ModelCost]
    total_cost: Decimal

    def to_dict(self) -> dict[str, Any]:
        return {
            "currency": self.currency,
            "per_model": {m: c.to_dict() for m, c in sorted(self.per_model.items())},
            "total_cost": float(self.total_cost),
        }


def _token_count(metrics: dict[str, Any], key: str) -> int:
    value = metrics.get(key, 0)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return 0
    return int(value)


def compute_cost(trace: Trace, price_table: PriceTable) -> CostBreakdown:
    """Spend per model: tokens/1000 * price-per-1k, summed over llm spans.

    Raises:
        MissingPrice: an llm span names a model absent from the table.
    """
    per_model: dict[str, ModelCost] = {}
    total = Decimal(0)
    for span in sorted(trace.spans.values(), key=lambda s: s.span_id):
        if span.kind is not SpanKind.LLM:
            continue
        model = span.payload.get("model_name")
        if not isinstance(model, str) or model not in price_table.models:
            raise MissingPrice(str(model))
        price = price_table.models[model]
        input_tokens = _token_count(span.metrics, "input_tokens")
        output_tokens = _token_count(span.metrics, "output_tokens")
        cost = (
            Decimal(input_tokens) * price.input_per_1k
            + Decimal(output_tokens) * price.output_per_1k
        ) / 1000
        entry = per_model.setdefault(model, ModelCost())
        entry.input_tokens += input_tokens
        entry.output_tokens += output_tokens
        entry.cost += cost
        total += cost
    return CostBreakdown(
        currency=price_table.currency, per_model=per_model, total_cost=total
    )


def combine_costs(breakdowns: Iterable[CostBreakdown]) -> CostBreakdown:
    """Merge per-trace breakdowns; cost is additive over disjoint spans."""
    merged: dict[str, ModelCost] = {}
    total = Decimal(0)
    currency = "USD"
    for breakdown in breakdowns:
        currency = breakdown.currency
        total += breakdown.total_cost
        for model, cost in breakdown.per_model.items():
            entry = merged.setdefault(model, ModelCost())
            entry.input_tokens += cost.input_tokens
            entry.output_tokens += cost.output_tokens
            entry.cost += cost.cost
    return CostBreakdown(currency=currency, per_model=merged, total_cost=total)


@dataclass
class LatencyStats:
    count: int
    mean_ns: float
    percentiles: dict[int, int | float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "mean_ns": self.mean_ns,
            "percentiles": {str(p): v for p, v in sorted(self.percentiles.items())},
        }


def nearest_rank(sorted_values: Sequence, percentile: int):
    """Value at 1-based index ceil(p/100 * N) of an ascending-sorted sample."""
    if not 1 <= percentile <= 100:
        raise ValueError(f"percentile must be in 1..100, got {percentile}")
    index = math.ceil(percentile * len(sorted_values) / 100)
    return sorted_values[index - 1]


def latency_stats(
    summaries: Iterable[Any], percentiles: Sequence[int] = (50, 90, 99)
) -> LatencyStats:
    """Nearest-rank latency percentiles plus mean and count.

    Accepts TraceSummary-like objects (their ``duration_ns``) or raw
    durations; entries without a duration are dropped.

    Raises:
        EmptyInput: no duration survives.
    """
    durations = []
    for item in summaries:
        value = getattr(item, "duration_ns", item)
        if value is not None:
            durations.append(value)
    if not durations:
        raise EmptyInput("no durations to summarize")
    durations.sort()
    return LatencyStats(
        count=len(durations),
        mean_ns=sum(durations) / len(durations),
        percentiles={p: nearest_rank(durations, p) for p in percentiles},
    )


def _children_map(trace: Trace) -> dict[str | None, list[Span]]:
    children: dict[str | None, list[Span]] = {}
    for span in trace.spans.values():
        children.setdefault(span.parent_id, []).append(span)
    return children


def _subtree(trace: Trace, root_id: str) -> list[Span]:
    children = _children_map(trace)
    seen: set[str] = set()
    stack = [root_id]
    out: list[Span] = []
    while stack:
        sid = stack.pop()
        if sid in seen:
            continue
        seen.add(sid)
        out.append(trace.spans[sid])
        stack.extend(c.span_id for c in children.get(sid, []))
    return out


def extract_trajectory(trace: Trace, workflow_span_id: str | None = None) -> list[str]:
    """Ordered tool names under one workflow, or under all workflows.

    Order is ascending start time; simultaneous tool spans tie-break by
    span_id so the result never depends on sub-ns clock trust.

    Raises:
        SpanNotFound / NotAWorkflow: bad workflow_span_id.
    """
    if workflow_span_id is not None:
        span = trace.spans.get(workflow_span_id)
        if span is None:
            raise SpanNotFound(f"span {workflow_span_id} not in trace")
        if span.kind is not SpanKind.WORKFLOW:
            raise NotAWorkflow(f"span {workflow_span_id} is a {span.kind.value} span")
        roots = [workflow_span_id]
    else:
        roots = [
            s.span_id for s in trace.spans.values() if s.kind is SpanKind.WORKFLOW
        ]
    tools: dict[str, Span] = {}
    for root in roots:
        for span in _subtree(trace, root):
            if span.kind is SpanKind.TOOL:
                tools[span.span_id] = span
    ordered = sorted(tools.values(), key=lambda s: (s.start_time_unix_ns, s.span_id))
    return [s.payload.get("tool_name") or s.name for s in ordered]


@dataclass
class SimilarityResult:
    exact: bool
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {"exact": self.exact, "score": self.score}


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance over sequences (insert/delete/substitute, unit cost)."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i]
        for j, item_b in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (item_a != item_b),
                )
            )
        previous = current
    return previous[len(b)]


def trajectory_similarity(
    expected: Sequence[str], actual: Sequence[str]
) -> SimilarityResult:
    """Normalized edit-distance score; 1.0 iff the paths match exactly."""
    expected = list(expected)
    actual = list(actual)
    if not expected and not actual:
        return SimilarityResult(exact=True, score=1.0)
    distance = levenshtein(expected, actual)
    score = 1.0 - distance / max(len(expected), len(actual))
    return SimilarityResult(exact=expected == actual, score=score)


@dataclass
class EvalEntry:
    span_id: str
    name: str
    eval_mode: str
    target_span_id: str | None
    target_kind: str
    testing_metrics: dict[str, Any]
    testing_results: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "span_id": self.span_id,
            "name": self.name,
            "eval_mode": self.eval_mode,
            "target_span_id": self.target_span_id,
            "target_kind": self.target_kind,
            "testing_metrics": self.testing_metrics,
            "testing_results": self.testing_results,
        }


@dataclass
class EvaluationRollup:
    entries: list[EvalEntry]
    by_mode: dict[str, int]
    by_target_kind: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "by_mode": dict(sorted(self.by_mode.items())),
            "by_target_kind": dict(sorted(self.by_target_kind.items())),
        }


def evaluation_rollup(trace: Trace) -> EvaluationRollup:
    """Group evaluation spans by eval_mode and by assesses-target kind.

    Every evaluation span appears exactly once; spans without a usable
    assesses link are grouped under "unlinked".
    """
    entries: list[EvalEntry] = []
    by_mode: Counter[str] = Counter()
    by_target: Counter[str] = Counter()
    for span in sorted(trace.spans.values(), key=lambda s: s.span_id):
        if span.kind is not SpanKind.EVALUATION:
            continue
        assesses = [l for l in span.links if l.relation is Relation.ASSESSES]
        target_id = assesses[0].target_span_id if assesses else None
        target = trace.spans.get(target_id) if target_id else None
        target_kind = target.kind.value if target else "unlinked"
        mode = span.payload.get("eval_mode") or "unspecified"
        entries.append(
            EvalEntry(
                span_id=span.span_id,
                name=span.name,
                eval_mode=mode,
                target_span_id=target.span_id if target else None,
                target_kind=target_kind,
                testing_metrics=span.payload.get("testing_metrics") or {},
                testing_results=span.payload.get("testing_results") or "",
            )
        )
        by_mode[mode] += 1
        by_target[target_kind] += 1
    return EvaluationRollup(
        entries=entries, by_mode=dict(by_mode), by_target_kind=dict(by_target)
    )


@dataclass
class AuditEntry:
    trace_id: str
    span_id: str
    name: str
    actions: list[str]
    target_span_ids: list[str]
    target_kinds: list[str]
    status: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "span_id": self.span_id,
            "name": self.name,
            "actions": self.actions,
            "target_span_ids": self.target_span_ids,
            "target_kinds": self.target_kinds,
            "status": self.status,
        }


@dataclass
class AuditReport:
    action_counts: dict[str, int]
    target_kind_counts: dict[str, int]
    entries: list[AuditEntry]
    time_range: tuple[int, int] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "action_counts": dict(sorted(self.action_counts.items())),
            "target_kind_counts": dict(sorted(self.target_kind_counts.items())),
            "entries": [e.to_dict() for e in self.entries],
            "time_range": list(self.time_range) if self.time_range else None,
        }


def guardrail_audit(traces: Iterable[Trace]) -> AuditReport:
    """Safety-case tally over guardrail spans: actions, targets, outcomes.

    Targets are the guardrail's monitors links resolved within its trace;
    outcome status comes from the guardrail span's end status ("open" for
    spans that never closed).
    """
    action_counts: Counter[str] = Counter()
    target_kind_counts: Counter[str] = Counter()
    entries: list[AuditEntry] = []
    start_min: int | None = None
    end_max: int | None = None
    for trace in sorted(traces, key=lambda t: t.trace_id):
        for span in sorted(trace.spans.values(), key=lambda s: s.span_id):
            if span.kind is not SpanKind.GUARDRAIL:
                continue
            actions = [
                a for a in (span.payload.get("actions") or []) if isinstance(a, str)
            ]
            for action in actions:
                action_counts[action] += 1
            target_ids: list[str] = []
            target_kinds: list[str] = []
            for link in span.links:
                if link.relation is not Relation.MONITORS:
                    continue
                if link.target_span_id is None:
                    continue
                target_ids.append(link.target_span_id)
                target = trace.spans.get(link.target_span_id)
                if target is not None:
                    target_kinds.append(target.kind.value)
                    target_kind_counts[target.kind.value] += 1
            entries.append(
                AuditEntry(
                    trace_id=trace.trace_id,
                    span_id=span.span_id,
                    name=span.name,
                    actions=actions,
                    target_span_ids=target_ids,
                    target_kinds=target_kinds,
                    status=span.status or "open",
                )
            )
            start_min = (
                span.start_time_unix_ns
                if start_min is None
                else min(start_min, span.start_time_unix_ns)
            )
            if span.end_time_unix_ns is not None:
                end_max = (
                    span.end_time_unix_ns
                    if end_max is None
                    else max(end_max, span.end_time_unix_ns)
                )
    time_range = None
    if start_min is not None:
        time_range = (start_min, end_max if end_max is not None else start_min)
    return AuditReport(
        action_counts=dict(action_counts),
        target_kind_counts=dict(target_kind_counts),
        entries=entries,
        time_range=time_range,
    )
