"""Seeded generator of taxonomy-conforming synthetic agent traces.

``generate`` builds one trace per (shape, seed) that passes strict
validation by construction; ``mutate`` applies one of thirteen targeted
edits, each of which makes exactly one rule report a violation. Together
they are the test corpus for the rest of the stack. Outputs depend only
on the shape and seed, never on the wall clock.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Any, Iterator, Sequence

from .errors import InvalidShape, NotApplicable, UnknownRule
from .model import (
    ErrorInfo,
    EventRecord,
    LinkRecord,
    Record,
    Relation,
    SpanEndRecord,
    SpanKind,
    SpanStartRecord,
    new_span_id,
    new_trace_id,
)
from .validator import RULE_IDS

# Synthetic clocks start at a fixed epoch offset; increments come from the
# seeded RNG, so parent windows contain child windows exactly.
BASE_TIME_NS = 1_700_000_000_000_000_000

ROLES = ("coder", "researcher", "support", "analyst")
PERSONAS = ("terse", "thorough", "cautious")
TOOLS = ("search", "calculator", "browser", "code_runner", "file_reader")
MODELS = ("orion-mini", "orion-large", "pulsar-8b")
KNOWLEDGE_BASES = ("docs", "wiki", "tickets")
GUARDRAIL_ACTIONS = ("block", "validation", "filter")
EVAL_MODES = ("final_response", "single_step", "trajectory")
PROMPTS = ("planner", "summarizer", "router")

# Each mutation is surgical: the report it provokes contains exactly the
# targeted rule. Mutation-kill tests match this table exactly.
EXPECTED_VIOLATIONS: dict[str, frozenset[str]] = {
    rule_id: frozenset({rule_id}) for rule_id in RULE_IDS
}


@dataclass(frozen=True)
class ShapeConfig:
    """Parameters describing one synthetic agent run."""

    seed: int = 0
    plans_per_agent: int = 1
    tasks_per_workflow: int = 3
    tools_per_task: int = 1
    llm_calls_per_task: int = 1
    llm_calls_per_plan: int = 1
    kb_links: int = 1
    guardrail_probability: float = 0.2
    error_probability: float = 0.1
    include_evaluation: bool = True


def _check_shape(shape: ShapeConfig) -> None:
    for name in (
        "plans_per_agent",
        "tasks_per_workflow",
        "tools_per_task",
        "llm_calls_per_task",
        "llm_calls_per_plan",
        "kb_links",
    ):
        if getattr(shape, name) < 0:
            raise InvalidShape(f"{name} must be >= 0")
    for name in ("guardrail_probability", "error_probability"):
        value = getattr(shape, name)
        if not 0.0 <= value <= 1.0:
            raise InvalidShape(f"{name} must be within [0, 1]")


def generate(shape: ShapeConfig) -> list[Record]:
    """Emit the records of one conforming trace, chronologically ordered."""
    _check_shape(shape)
    rng = random.Random(shape.seed)
    trace_id = new_trace_id(rng)
    records: list[Record] = []
    now = BASE_TIME_NS + rng.randint(0, 10**9)

    def tick() -> int:
        nonlocal now
        now += rng.randint(50_000, 500_000)
        return now

    def open_span(
        parent_id: str | None,
        name: str,
        kind: SpanKind,
        payload: dict[str, Any],
        inputs: Any = None,
        span_id: str | None = None,
    ) -> str:
        sid = span_id or new_span_id(rng)
        records.append(
            SpanStartRecord(
                trace_id=trace_id,
                span_id=sid,
                parent_id=parent_id,
                name=name,
                kind=kind,
                start_time_unix_ns=tick(),
                payload=payload,
                inputs=inputs,
            )
        )
        return sid

    def close_span(
        span_id: str,
        status: str = "ok",
        error: ErrorInfo | None = None,
        metrics: dict[str, Any] | None = None,
        outputs: Any = None,
    ) -> None:
        records.append(
            SpanEndRecord(
                trace_id=trace_id,
                span_id=span_id,
                end_time_unix_ns=tick(),
                status=status,
                error=error,
                metrics=metrics or {},
                outputs=outputs,
            )
        )

    def link(
        span_id: str,
        relation: Relation,
        target_span_id: str | None = None,
        resource: str | None = None,
    ) -> None:
        records.append(
            LinkRecord(
                trace_id=trace_id,
                span_id=span_id,
                relation=relation,
                target_span_id=target_span_id,
                resource=resource,
            )
        )

    def status_event(span_id: str, status: str) -> None:
        records.append(
            EventRecord(
                trace_id=trace_id,
                span_id=span_id,
                time_unix_ns=tick(),
                name="status",
                attributes={"status": status},
            )
        )

    def llm_span(parent_id: str, name: str) -> None:
        model = rng.choice(MODELS)
        sid = open_span(
            parent_id,
            name,
            SpanKind.LLM,
            {
                "model_name": model,
                "model_version": f"202{rng.randint(3, 5)}.{rng.randint(1, 12)}",
                "parameters": {
                    "temperature": rng.randint(0, 10) / 10,
                    "max_tokens": rng.choice((256, 512, 1024)),
                },
                "prompt_name": rng.choice(PROMPTS),
                "prompt_version": rng.randint(1, 3),
            },
            inputs={"prompt": f"step {name}"},
        )
        close_span(
            sid,
            metrics={
                "input_tokens": rng.randint(100, 4000),
                "output_tokens": rng.randint(10, 1500),
            },
            outputs={"text": f"completion for {name}"},
        )

    goal = f"goal-{rng.randint(1, 999)}"
    agent_id = open_span(
        None,
        "agent_run",
        SpanKind.AGENT,
        {"role": rng.choice(ROLES), "persona": rng.choice(PERSONAS)},
        inputs={"goal": goal},
    )
    for _ in range(shape.kb_links):
        link(
            agent_id,
            Relation.USES_KNOWLEDGE_BASE,
            resource=f"kb://{rng.choice(KNOWLEDGE_BASES)}",
        )

    with_guardrail = rng.random() < shape.guardrail_probability
    tool_ids: list[str] = []
    last_planning: str | None = None
    last_workflow: str | None = None

    for plan_index in range(1, shape.plans_per_agent + 1):
        reasoning_id = open_span(
            agent_id,
            f"reason_{plan_index}",
            SpanKind.REASONING,
            {
                "context": f"user goal {goal}",
                "retrieved_knowledge": f"notes from {rng.choice(KNOWLEDGE_BASES)}",
                "inference_rules": "prefer cheapest viable tool",
                "outcome": f"draft plan {plan_index}",
            },
        )
        close_span(reasoning_id)

        planning_id = open_span(
            agent_id,
            f"plan_{plan_index}",
            SpanKind.PLANNING,
            {
                "goal": goal,
                "constraints": [f"budget<{rng.randint(1, 9)}USD", "no-network-writes"],
                "context": "fresh session",
                "historical_plans": [f"plan-{rng.randint(100, 999)}"],
            },
        )
        link(reasoning_id, Relation.GENERATES, target_span_id=planning_id)
        last_planning = planning_id
        for call in range(1, shape.llm_calls_per_plan + 1):
            llm_span(planning_id, f"plan_llm_{plan_index}_{call}")
        close_span(planning_id)

        task_ids = [new_span_id(rng) for _ in range(shape.tasks_per_workflow)]
        dependencies = [
            [task_ids[i], task_ids[i + 1]] for i in range(len(task_ids) - 1)
        ]
        workflow_id = open_span(
            agent_id,
            f"workflow_{plan_index}",
            SpanKind.WORKFLOW,
            {
                "task_dependencies": dependencies,
                "operational_context": "local sandbox",
                "past_execution_history": [f"run-{rng.randint(100, 999)}"],
            },
        )
        link(planning_id, Relation.REALIZED_BY, target_span_id=workflow_id)
        last_workflow = workflow_id

        for task_index, task_id in enumerate(task_ids, start=1):
            fails = rng.random() < shape.error_probability
            open_span(
                workflow_id,
                f"task_{plan_index}_{task_index}",
                SpanKind.TASK,
                {
                    "description": f"execute step {task_index} of plan {plan_index}",
                    "status": "failed" if fails else "completed",
                },
                span_id=task_id,
            )
            status_event(task_id, "pending")
            status_event(task_id, "in_progress")
            for tool_index in range(1, shape.tools_per_task + 1):
                tool = rng.choice(TOOLS)
                tool_id = open_span(
                    task_id,
                    tool,
                    SpanKind.TOOL,
                    {
                        "tool_name": tool,
                        "tool_version": f"{rng.randint(1, 3)}.{rng.randint(0, 9)}",
                        "configuration": {"timeout_s": rng.choice((10, 30, 60))},
                    },
                    inputs={"query": f"{tool} input {tool_index}"},
                )
                tool_ids.append(tool_id)
                close_span(tool_id, outputs={"result": f"{tool} output"})
            for call in range(1, shape.llm_calls_per_task + 1):
                llm_span(task_id, f"task_llm_{task_index}_{call}")
            status_event(task_id, "failed" if fails else "completed")
            if fails:
                close_span(
                    task_id,
                    status="error",
                    error=ErrorInfo(
                        type="TaskError",
                        message=f"step {task_index} failed",
                        traceback="TaskError: synthetic failure",
                    ),
                )
            else:
                close_span(task_id, outputs={"summary": f"step {task_index} done"})
        close_span(workflow_id)

    if shape.include_evaluation:
        evaluation_id = open_span(
            agent_id,
            "evaluation",
            SpanKind.EVALUATION,
            {
                "test_cases": ["happy-path", "tool-failure"],
                "testing_metrics": {"accuracy_percent": rng.randint(50, 100)},
                "testing_results": "within expected bounds",
                "eval_mode": rng.choice(EVAL_MODES),
            },
        )
        candidates = [agent_id]
        if last_planning:
            candidates.append(last_planning)
        if last_workflow:
            candidates.append(last_workflow)
        link(evaluation_id, Relation.ASSESSES, target_span_id=rng.choice(candidates))
        close_span(evaluation_id)

    if with_guardrail:
        targets = [agent_id]
        if tool_ids:
            targets.append(rng.choice(tool_ids))
        guardrail_id = open_span(
            agent_id,
            "guardrail",
            SpanKind.GUARDRAIL,
            {
                "actions": [rng.choice(GUARDRAIL_ACTIONS)],
                "targets": list(targets),
            },
        )
        for target in targets:
            link(guardrail_id, Relation.MONITORS, target_span_id=target)
        close_span(guardrail_id)

    close_span(agent_id, outputs={"result": f"done: {goal}"})
    return records


def generate_many(shape: ShapeConfig, count: int) -> Iterator[list[Record]]:
    """Generate `count` traces seeded shape.seed, shape.seed+1, ..."""
    for offset in range(count):
        yield generate(replace(shape, seed=shape.seed + offset))


# ---------------------------------------------------------------------------
# Mutations


def _starts(records: Sequence[Record], kind: SpanKind | None = None):
    return [
        (i, r)
        for i, r in enumerate(records)
        if isinstance(r, SpanStartRecord) and (kind is None or r.kind is kind)
    ]


def _ends(records: Sequence[Record]) -> list[tuple[int, SpanEndRecord]]:
    return [(i, r) for i, r in enumerate(records) if isinstance(r, SpanEndRecord)]


def _links(records: Sequence[Record], relation: Relation):
    return [
        (i, r)
        for i, r in enumerate(records)
        if isinstance(r, LinkRecord) and r.relation is relation
    ]


def _all_span_ids(records: Sequence[Record]) -> set[str]:
    return {r.span_id for r in records if isinstance(r, SpanStartRecord)}


def _fresh_unused_id(records: Sequence[Record], rng: random.Random) -> str:
    used = _all_span_ids(records)
    while True:
        sid = new_span_id(rng)
        if sid not in used:
            return sid


def _pick(candidates: list, rng: random.Random, what: str):
    if not candidates:
        raise NotApplicable(f"trace has no {what}")
    return rng.choice(sorted(candidates, key=lambda pair: pair[1].span_id))


def _without(records: Sequence[Record], index: int) -> list[Record]:
    return [r for i, r in enumerate(records) if i != index]


def _mutate_r01(records, rng):
    """Add a second null-parent span: the trace gains a stray root."""
    last_time = max(
        (r.end_time_unix_ns for r in records if isinstance(r, SpanEndRecord)),
        default=BASE_TIME_NS,
    )
    trace_id = records[0].trace_id
    sid = _fresh_unused_id(records, rng)
    return list(records) + [
        SpanStartRecord(
            trace_id=trace_id,
            span_id=sid,
            parent_id=None,
            name="stray_root",
            kind=SpanKind.AGENT,
            start_time_unix_ns=last_time + 1_000,
            payload={},
        ),
        SpanEndRecord(
            trace_id=trace_id,
            span_id=sid,
            end_time_unix_ns=last_time + 2_000,
            status="ok",
        ),
    ]


def _mutate_r02(records, rng):
    """Point a leaf span's parent_id at an id that does not exist."""
    leaves = _starts(records, SpanKind.TOOL) + _starts(records, SpanKind.LLM)
    index, start = _pick(leaves, rng, "tool or llm spans")
    out = list(records)
    out[index] = replace(start, parent_id=_fresh_unused_id(records, rng))
    return out


def _mutate_r03(records, rng):
    """Push a leaf span's end past its parent's end by ten milliseconds."""
    leaves = _starts(records, SpanKind.TOOL) + _starts(records, SpanKind.LLM)
    candidates = []
    ends_by_span = {r.span_id: (i, r) for i, r in _ends(records)}
    for _, start in leaves:
        if start.span_id in ends_by_span and start.parent_id in ends_by_span:
            candidates.append((ends_by_span[start.span_id][0], start))
    index, start = _pick(candidates, rng, "ended leaf spans with ended parents")
    parent_end = ends_by_span[start.parent_id][1]
    out = list(records)
    child_end = ends_by_span[start.span_id][1]
    out[index] = replace(
        child_end, end_time_unix_ns=parent_end.end_time_unix_ns + 10_000_000
    )
    return out


def _mutate_r04(records, rng):
    """Re-parent an llm span under the agent root, where it may not nest."""
    roots = [
        (i, r)
        for i, r in _starts(records, SpanKind.AGENT)
        if r.parent_id is None
    ]
    if not roots:
        raise NotApplicable("trace has no agent root")
    index, start = _pick(_starts(records, SpanKind.LLM), rng, "llm spans")
    out = list(records)
    out[index] = replace(start, parent_id=roots[0][1].span_id)
    return out


def _mutate_r05(records, rng):
    """Delete a generates link: the reasoning span loses its plan."""
    index, _ = _pick(_links(records, Relation.GENERATES), rng, "generates links")
    return _without(records, index)


def _mutate_r06(records, rng):
    """Delete a realized_by link: plan and workflow become unpaired."""
    index, _ = _pick(_links(records, Relation.REALIZED_BY), rng, "realized_by links")
    return _without(records, index)


def _mutate_r07(records, rng):
    """Add a reversed (or self) dependency pair, closing a cycle."""
    candidates = []
    for i, r in _starts(records, SpanKind.WORKFLOW):
        deps = r.payload.get("task_dependencies") or []
        tasks = [
            s.span_id
            for _, s in _starts(records, SpanKind.TASK)
            if s.parent_id == r.span_id
        ]
        if deps or tasks:
            candidates.append((i, r))
    index, start = _pick(candidates, rng, "workflows with tasks")
    deps = list(start.payload.get("task_dependencies") or [])
    if deps:
        first = deps[0]
        deps.append([first[1], first[0]])
    else:
        task = sorted(
            s.span_id
            for _, s in _starts(records, SpanKind.TASK)
            if s.parent_id == start.span_id
        )[0]
        deps.append([task, task])
    out = list(records)
    out[index] = replace(
        start, payload={**start.payload, "task_dependencies": deps}
    )
    return out


def _mutate_r08(records, rng):
    """Drop the input_tokens metric from an llm span_end."""
    llm_ids = {r.span_id for _, r in _starts(records, SpanKind.LLM)}
    candidates = [
        (i, r)
        for i, r in _ends(records)
        if r.span_id in llm_ids and "input_tokens" in r.metrics
    ]
    index, end = _pick(candidates, rng, "llm spans with token metrics")
    metrics = {k: v for k, v in end.metrics.items() if k != "input_tokens"}
    out = list(records)
    out[index] = replace(end, metrics=metrics)
    return out


def _mutate_r09(records, rng):
    """Remove every monitors link of one guardrail span."""
    guardrails = _starts(records, SpanKind.GUARDRAIL)
    _, start = _pick(guardrails, rng, "guardrail spans")
    drop = {
        i
        for i, r in _links(records, Relation.MONITORS)
        if r.span_id == start.span_id
    }
    if not drop:
        raise NotApplicable("guardrail span has no monitors links")
    return [r for i, r in enumerate(records) if i not in drop]


def _mutate_r10(records, rng):
    """Remove the in_progress status event: pending jumps to a final state."""
    candidates = []
    for i, r in enumerate(records):
        if (
            isinstance(r, EventRecord)
            and r.name == "status"
            and r.attributes.get("status") == "in_progress"
        ):
            candidates.append((i, r))
    index, _ = _pick(candidates, rng, "in_progress status events")
    return _without(records, index)


def _mutate_r11(records, rng):
    """Delete an assesses link: the evaluation loses its target."""
    index, _ = _pick(_links(records, Relation.ASSESSES), rng, "assesses links")
    return _without(records, index)


def _mutate_r12(records, rng):
    """Delete a span_end record, leaving the span open."""
    index, _ = _pick(_ends(records), rng, "span_end records")
    return _without(records, index)


def _mutate_r13(records, rng):
    """Inject a payload field no span kind declares."""
    index, start = _pick(_starts(records), rng, "span_start records")
    out = list(records)
    out[index] = replace(
        start, payload={**start.payload, "zzz_unexpected": "injected"}
    )
    return out


_MUTATIONS = {
    "R01": _mutate_r01,
    "R02": _mutate_r02,
    "R03": _mutate_r03,
    "R04": _mutate_r04,
    "R05": _mutate_r05,
    "R06": _mutate_r06,
    "R07": _mutate_r07,
    "R08": _mutate_r08,
    "R09": _mutate_r09,
    "R10": _mutate_r10,
    "R11": _mutate_r11,
    "R12": _mutate_r12,
    "R13": _mutate_r13,
}


def mutate(records: Sequence[Record], rule_id: str, seed: int = 0) -> list[Record]:
    """Minimally edit a conforming record sequence to violate one rule.

    Raises:
        UnknownRule: rule_id outside R01..R13.
        NotApplicable: the trace lacks the structure the edit needs.
    """
    mutation = _MUTATIONS.get(rule_id)
    if mutation is None:
        raise UnknownRule(f"unknown rule {rule_id!r}")
    if not records:
        raise NotApplicable("no records to mutate")
    return mutation(records, random.Random(seed))
