"""Structural conformance rules for assembled traces.

Thirteen independent rules (R01..R13) check the containment tree, the
cross-cutting link cardinalities, and per-kind payload schemas. Strict
mode is the audit posture; lenient mode relaxes the exact-one link
cardinalities to at-most-one and tolerates open spans, admitting traces
still in flight.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable

from .errors import UnknownRule
from .model import (
    PAYLOAD_SCHEMA,
    FieldSpec,
    Relation,
    Span,
    SpanKind,
    Trace,
)

RULE_IDS = tuple(f"R{n:02d}" for n in range(1, 14))

_LINK_OWNERS = {
    Relation.GENERATES: SpanKind.REASONING,
    Relation.REALIZED_BY: SpanKind.PLANNING,
    Relation.ASSESSES: SpanKind.EVALUATION,
    Relation.MONITORS: SpanKind.GUARDRAIL,
}

_TASK_TRANSITIONS = {
    "pending": {"in_progress"},
    "in_progress": {"completed", "failed"},
    "completed": set(),
    "failed": set(),
}


@dataclass(frozen=True)
class ValidatorConfig:
    """Knobs for validation; defaults express the strict audit posture."""

    mode: str = "strict"  # strict | lenient
    containment_epsilon_ns: int = 1_000_000
    llm_parent_kinds: frozenset[str] = frozenset({"planning", "task"})
    agent_parent_kinds: frozenset[str] = frozenset({"none", "agent"})
    require_completion: bool | None = None  # None: follow mode
    disabled_rules: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.mode not in ("strict", "lenient"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.containment_epsilon_ns < 0:
            raise ValueError("containment_epsilon_ns must be >= 0")
        unknown = set(self.disabled_rules) - set(RULE_IDS)
        if unknown:
            raise UnknownRule(f"unknown rule ids: {sorted(unknown)}")

    @property
    def strict(self) -> bool:
        return self.mode == "strict"

    @property
    def completion_required(self) -> bool:
        if self.require_completion is None:
            return self.strict
        return self.require_completion

    def disable(self, *rule_ids: str) -> "ValidatorConfig":
        return replace(self, disabled_rules=self.disabled_rules | set(rule_ids))


@dataclass(frozen=True)
class Violation:
    rule_id: str
    span_ids: tuple[str, ...]
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "span_ids": list(self.span_ids),
            "message": self.message,
        }


@dataclass
class ValidationReport:
    trace_id: str
    mode: str
    violations: list[Violation]
    checked_rules: list[str]

    @property
    def conforming(self) -> bool:
        return not self.violations

    def rule_ids(self) -> set[str]:
        return {v.rule_id for v in self.violations}

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "mode": self.mode,
            "violations": [v.to_dict() for v in self.violations],
            "checked_rules": list(self.checked_rules),
        }


@dataclass(frozen=True)
class RuleDoc:
    rule_id: str
    description: str
    rationale: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "description": self.description,
            "rationale": self.rationale,
        }


def _spans_in_order(trace: Trace) -> list[Span]:
    return sorted(trace.spans.values(), key=lambda s: s.span_id)


def _resolved_parent(trace: Trace, span: Span) -> Span | None:
    if span.parent_id is None:
        return None
    return trace.spans.get(span.parent_id)


def _outgoing(span: Span, relation: Relation):
    return [l for l in span.links if l.relation is relation]


def _in_trace_target(trace: Trace, link) -> Span | None:
    """Resolve a link target within this trace, or None."""
    if link.target_span_id is None:
        return None
    if link.target_trace_id is not None and link.target_trace_id != trace.trace_id:
        return None
    return trace.spans.get(link.target_span_id)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_count(value: Any) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, int):
        return value >= 0
    return isinstance(value, float) and value.is_integer() and value >= 0


# ---------------------------------------------------------------------------
# Rules


def _r01_single_root(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Exactly one span has a null parent."""
    roots = tuple(trace.root_span_ids)
    if len(roots) == 1:
        return []
    return [
        Violation(
            "R01",
            roots,
            f"expected exactly one root span, found {len(roots)}",
        )
    ]


def _r02_parent_tree(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Every parent_id resolves and parent pointers are acyclic."""
    out = []
    for span in _spans_in_order(trace):
        if span.parent_id is not None and span.parent_id not in trace.spans:
            out.append(
                Violation(
                    "R02",
                    (span.span_id,),
                    f"parent {span.parent_id} of span {span.span_id} does not resolve",
                )
            )
    state: dict[str, int] = {}  # 1=on current walk, 2=done
    for span in _spans_in_order(trace):
        walk = []
        sid: str | None = span.span_id
        while sid is not None and sid in trace.spans and state.get(sid, 0) != 2:
            if state.get(sid) == 1:
                cycle = walk[walk.index(sid):]
                out.append(
                    Violation(
                        "R02",
                        tuple(sorted(cycle)),
                        "parent pointers form a cycle: " + " -> ".join(sorted(cycle)),
                    )
                )
                break
            state[sid] = 1
            walk.append(sid)
            sid = trace.spans[sid].parent_id
        for w in walk:
            state[w] = 2
    return out


def _r03_time_containment(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Child span windows stay within the parent window, +/- epsilon."""
    eps = config.containment_epsilon_ns
    out = []
    for span in _spans_in_order(trace):
        parent = _resolved_parent(trace, span)
        if parent is None:
            continue
        if span.start_time_unix_ns < parent.start_time_unix_ns - eps:
            out.append(
                Violation(
                    "R03",
                    (span.span_id, parent.span_id),
                    f"span {span.span_id} starts "
                    f"{parent.start_time_unix_ns - span.start_time_unix_ns} ns "
                    f"before parent {parent.span_id} (epsilon {eps})",
                )
            )
        if (
            span.end_time_unix_ns is not None
            and parent.end_time_unix_ns is not None
            and span.end_time_unix_ns > parent.end_time_unix_ns + eps
        ):
            out.append(
                Violation(
                    "R03",
                    (span.span_id, parent.span_id),
                    f"span {span.span_id} ends "
                    f"{span.end_time_unix_ns - parent.end_time_unix_ns} ns "
                    f"after parent {parent.span_id} (epsilon {eps})",
                )
            )
    return out


def _r04_kind_nesting(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Span kinds nest per the taxonomy containment tree."""
    allowed: dict[SpanKind, frozenset[str]] = {
        SpanKind.AGENT: config.agent_parent_kinds,
        SpanKind.REASONING: frozenset({"agent"}),
        SpanKind.PLANNING: frozenset({"agent"}),
        SpanKind.WORKFLOW: frozenset({"agent"}),
        SpanKind.TASK: frozenset({"workflow"}),
        SpanKind.TOOL: frozenset({"task"}),
        SpanKind.LLM: config.llm_parent_kinds,
        SpanKind.EVALUATION: frozenset({"agent", "none"}),
    }
    out = []
    for span in _spans_in_order(trace):
        permitted = allowed.get(span.kind)
        if permitted is None:  # guardrail: cross-cutting, any placement
            continue
        if span.parent_id is None:
            parent_kind = "none"
        else:
            parent = trace.spans.get(span.parent_id)
            if parent is None:  # unresolved parent is R02's finding
                continue
            parent_kind = parent.kind.value
        if parent_kind not in permitted:
            out.append(
                Violation(
                    "R04",
                    (span.span_id,),
                    f"{span.kind.value} span {span.span_id} may not nest under "
                    f"{parent_kind} (allowed: {', '.join(sorted(permitted))})",
                )
            )
    return out


def _cardinality(config: ValidatorConfig, count: int) -> bool:
    """Exact-one in strict mode, at-most-one in lenient mode."""
    return count == 1 if config.strict else count <= 1


def _r05_generates(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """A reasoning span generates exactly one plan."""
    out = []
    for span in _spans_in_order(trace):
        links = _outgoing(span, Relation.GENERATES)
        if span.kind is not SpanKind.REASONING:
            if links:
                out.append(
                    Violation(
                        "R05",
                        (span.span_id,),
                        f"generates link on non-reasoning span {span.span_id} "
                        f"({span.kind.value})",
                    )
                )
            continue
        if not _cardinality(config, len(links)):
            out.append(
                Violation(
                    "R05",
                    (span.span_id,),
                    f"reasoning span {span.span_id} has {len(links)} generates links",
                )
            )
        for link in links:
            target = _in_trace_target(trace, link)
            if target is None or target.kind is not SpanKind.PLANNING:
                out.append(
                    Violation(
                        "R05",
                        (span.span_id,),
                        f"generates link of {span.span_id} does not target a "
                        f"planning span in this trace",
                    )
                )
    return out


def _r06_realized_by(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """A plan is realized by exactly one workflow, and vice versa."""
    out = []
    incoming: dict[str, int] = {}
    for span in _spans_in_order(trace):
        links = _outgoing(span, Relation.REALIZED_BY)
        if span.kind is not SpanKind.PLANNING:
            if links:
                out.append(
                    Violation(
                        "R06",
                        (span.span_id,),
                        f"realized_by link on non-planning span {span.span_id} "
                        f"({span.kind.value})",
                    )
                )
            continue
        if not _cardinality(config, len(links)):
            out.append(
                Violation(
                    "R06",
                    (span.span_id,),
                    f"planning span {span.span_id} has {len(links)} realized_by links",
                )
            )
        for link in links:
            target = _in_trace_target(trace, link)
            if target is None or target.kind is not SpanKind.WORKFLOW:
                out.append(
                    Violation(
                        "R06",
                        (span.span_id,),
                        f"realized_by link of {span.span_id} does not target a "
                        f"workflow span in this trace",
                    )
                )
            else:
                incoming[target.span_id] = incoming.get(target.span_id, 0) + 1
    for span in _spans_in_order(trace):
        if span.kind is not SpanKind.WORKFLOW:
            continue
        count = incoming.get(span.span_id, 0)
        if not _cardinality(config, count):
            out.append(
                Violation(
                    "R06",
                    (span.span_id,),
                    f"workflow span {span.span_id} is target of {count} "
                    f"realized_by links",
                )
            )
    return out


def _r07_task_dependencies(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Dependencies reference sibling tasks of the workflow and form a DAG."""
    out = []
    for span in _spans_in_order(trace):
        if span.kind is not SpanKind.WORKFLOW:
            continue
        deps = span.payload.get("task_dependencies")
        if not isinstance(deps, list):
            continue  # shape problems are R13's finding
        siblings = {
            s.span_id
            for s in trace.spans.values()
            if s.kind is SpanKind.TASK and s.parent_id == span.span_id
        }
        edges: list[tuple[str, str]] = []
        for pair in deps:
            if not (
                isinstance(pair, list)
                and len(pair) == 2
                and all(isinstance(x, str) for x in pair)
            ):
                continue
            prereq, dependent = pair
            missing = [x for x in (prereq, dependent) if x not in siblings]
            if missing:
                out.append(
                    Violation(
                        "R07",
                        (span.span_id,),
                        f"dependency ({prereq}, {dependent}) of workflow "
                        f"{span.span_id} references non-sibling task(s): "
                        + ", ".join(missing),
                    )
                )
            else:
                edges.append((prereq, dependent))
        cycle = _find_cycle(siblings, edges)
        if cycle:
            out.append(
                Violation(
                    "R07",
                    (span.span_id,),
                    f"task dependencies of workflow {span.span_id} form a cycle: "
                    + " -> ".join(cycle),
                )
            )
    return out


def _find_cycle(nodes: set[str], edges: list[tuple[str, str]]) -> list[str] | None:
    """Return one cycle in `edges` (sorted node list), or None if a DAG."""
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in edges:
        succ[a].append(b)
    state: dict[str, int] = {}
    for start in sorted(nodes):
        if state.get(start):
            continue
        stack = [(start, iter(succ[start]))]
        state[start] = 1
        path = [start]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
                continue
            if state.get(nxt) == 1:
                return sorted(path[path.index(nxt):])
            if not state.get(nxt):
                state[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(succ[nxt])))
    return None


def _r08_llm_tokens(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Ended llm spans report non-negative integer token counts."""
    out = []
    for span in _spans_in_order(trace):
        if span.kind is not SpanKind.LLM or not span.ended:
            continue
        for key in ("input_tokens", "output_tokens"):
            if not _is_count(span.metrics.get(key)):
                out.append(
                    Violation(
                        "R08",
                        (span.span_id,),
                        f"llm span {span.span_id} lacks a non-negative integer "
                        f"{key} metric",
                    )
                )
    return out


def _r09_guardrail_targets(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Guardrails carry at least one monitors link and all targets resolve."""
    out = []
    for span in _spans_in_order(trace):
        monitors = _outgoing(span, Relation.MONITORS)
        if span.kind is not SpanKind.GUARDRAIL:
            if monitors:
                out.append(
                    Violation(
                        "R09",
                        (span.span_id,),
                        f"monitors link on non-guardrail span {span.span_id} "
                        f"({span.kind.value})",
                    )
                )
            continue
        if not monitors:
            out.append(
                Violation(
                    "R09",
                    (span.span_id,),
                    f"guardrail span {span.span_id} has no monitors link",
                )
            )
        for link in monitors:
            if link.target_span_id is None or _in_trace_target(trace, link) is None:
                out.append(
                    Violation(
                        "R09",
                        (span.span_id,),
                        f"monitors link of guardrail {span.span_id} does not "
                        f"resolve to a span in this trace",
                    )
                )
        targets = span.payload.get("targets")
        if isinstance(targets, list):
            for target in targets:
                if not isinstance(target, str) or target not in trace.spans:
                    out.append(
                        Violation(
                            "R09",
                            (span.span_id,),
                            f"guardrail {span.span_id} lists unresolved target "
                            f"{target!r}",
                        )
                    )
    return out


def _r10_task_status(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Status events follow pending -> in_progress -> completed|failed.

    Transitions are reconstructed from the span's time-ordered events named
    "status", reading the new state from the "status" attribute.
    """
    out = []
    for span in _spans_in_order(trace):
        if span.kind is not SpanKind.TASK:
            continue
        states = [
            e.attributes.get("status")
            for e in span.events
            if e.name == "status"
        ]
        if not states:
            continue
        previous = None
        for state in states:
            if state not in _TASK_TRANSITIONS:
                out.append(
                    Violation(
                        "R10",
                        (span.span_id,),
                        f"task {span.span_id} reports unknown status {state!r}",
                    )
                )
                break
            if previous is None:
                if state != "pending":
                    out.append(
                        Violation(
                            "R10",
                            (span.span_id,),
                            f"task {span.span_id} status history starts at "
                            f"{state!r}, expected 'pending'",
                        )
                    )
                    break
            elif state not in _TASK_TRANSITIONS[previous]:
                out.append(
                    Violation(
                        "R10",
                        (span.span_id,),
                        f"task {span.span_id} has illegal status transition "
                        f"{previous!r} -> {state!r}",
                    )
                )
                break
            previous = state
    return out


def _r11_assesses(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Evaluations assess exactly one agent, planning, or workflow span."""
    assessable = (SpanKind.AGENT, SpanKind.PLANNING, SpanKind.WORKFLOW)
    out = []
    for span in _spans_in_order(trace):
        links = _outgoing(span, Relation.ASSESSES)
        if span.kind is not SpanKind.EVALUATION:
            if links:
                out.append(
                    Violation(
                        "R11",
                        (span.span_id,),
                        f"assesses link on non-evaluation span {span.span_id} "
                        f"({span.kind.value})",
                    )
                )
            continue
        if not _cardinality(config, len(links)):
            out.append(
                Violation(
                    "R11",
                    (span.span_id,),
                    f"evaluation span {span.span_id} has {len(links)} assesses links",
                )
            )
        for link in links:
            target = _in_trace_target(trace, link)
            if target is None or target.kind not in assessable:
                out.append(
                    Violation(
                        "R11",
                        (span.span_id,),
                        f"assesses link of {span.span_id} must target an agent, "
                        f"planning, or workflow span in this trace",
                    )
                )
    return out


def _r12_completion(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Every span carries a span_end (complete-trace audits only)."""
    if not config.completion_required:
        return []
    return [
        Violation("R12", (s.span_id,), f"span {s.span_id} has no span_end")
        for s in _spans_in_order(trace)
        if not s.ended
    ]


def _field_type_ok(spec: FieldSpec, value: Any) -> bool:
    if spec.type == "text":
        return isinstance(value, str)
    if spec.type == "text_list":
        return isinstance(value, list) and all(isinstance(x, str) for x in value)
    if spec.type == "map":
        return isinstance(value, dict)
    if spec.type == "number_map":
        return isinstance(value, dict) and all(_is_number(v) for v in value.values())
    if spec.type == "id_list":
        return isinstance(value, list) and all(isinstance(x, str) for x in value)
    if spec.type == "id_pair_list":
        return isinstance(value, list) and all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(x, str) for x in p)
            for p in value
        )
    if spec.type == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if spec.type == "enum":
        return isinstance(value, str) and value in spec.choices
    raise AssertionError(f"unhandled field type {spec.type}")


def _r13_payload_schema(trace: Trace, config: ValidatorConfig) -> list[Violation]:
    """Payload fields match the span kind's schema; strict flags unknowns."""
    out = []
    for span in _spans_in_order(trace):
        schema = PAYLOAD_SCHEMA[span.kind]
        for name, spec in schema.items():
            if spec.required and not span.payload.get(name):
                out.append(
                    Violation(
                        "R13",
                        (span.span_id,),
                        f"{span.kind.value} span {span.span_id} lacks required "
                        f"payload field {name!r}",
                    )
                )
        for name in sorted(span.payload):
            spec = schema.get(name)
            if spec is None:
                if config.strict:
                    out.append(
                        Violation(
                            "R13",
                            (span.span_id,),
                            f"{span.kind.value} span {span.span_id} carries "
                            f"unknown payload field {name!r}",
                        )
                    )
                continue
            if not _field_type_ok(spec, span.payload[name]):
                out.append(
                    Violation(
                        "R13",
                        (span.span_id,),
                        f"payload field {name!r} of {span.kind.value} span "
                        f"{span.span_id} has the wrong type",
                    )
                )
    return out


@dataclass(frozen=True)
class _Rule:
    rule_id: str
    description: str
    rationale: str
    check: Callable[[Trace, ValidatorConfig], list[Violation]]


RULES: dict[str, _Rule] = {
    r.rule_id: r
    for r in (
        _Rule(
            "R01",
            "a trace has exactly one root span (null parent)",
            "The first span represents the root span.",
            _r01_single_root,
        ),
        _Rule(
            "R02",
            "parent ids resolve within the trace and are acyclic",
            "Parent ID links a span to its parent, establishing a hierarchical "
            "relationship between spans.",
            _r02_parent_tree,
        ),
        _Rule(
            "R03",
            "child span time windows sit inside the parent window, within a "
            "configurable epsilon",
            "Collectors and agent hosts rarely share one clock; containment is "
            "checked with a tolerance.",
            _r03_time_containment,
        ),
        _Rule(
            "R04",
            "span kinds nest per the taxonomy: reasoning/planning/workflow under "
            "agent, task under workflow, tool under task, llm under the "
            "configured parent kinds",
            "A workflow comprises multiple tasks; each plan span may call one or "
            "more LLM spans; task may also call one or more LLM spans.",
            _r04_kind_nesting,
        ),
        _Rule(
            "R05",
            "each reasoning span has exactly one outgoing generates link to a "
            "planning span (lenient: at most one)",
            "A single reasoning span generates a plan.",
            _r05_generates,
        ),
        _Rule(
            "R06",
            "each planning span has exactly one realized_by link to a workflow, "
            "and each workflow is the target of exactly one",
            "A plan is realized as a single Workflow.",
            _r06_realized_by,
        ),
        _Rule(
            "R07",
            "task_dependencies reference sibling tasks of the same workflow and "
            "form a DAG",
            "Task Dependencies: Information about dependencies between tasks.",
            _r07_task_dependencies,
        ),
        _Rule(
            "R08",
            "ended llm spans carry integer input_tokens >= 0 and "
            "output_tokens >= 0 metrics",
            "Metrics such as input_tokens, output_tokens, evaluation metrics "
            "measure and track cost usage.",
            _r08_llm_tokens,
        ),
        _Rule(
            "R09",
            "guardrail spans carry at least one monitors link and every listed "
            "target resolves",
            "The guardrail monitors all other spans.",
            _r09_guardrail_targets,
        ),
        _Rule(
            "R10",
            "task status events follow pending -> in_progress -> "
            "completed|failed",
            "Task Status: The current status (e.g., pending, in progress, "
            "completed).",
            _r10_task_status,
        ),
        _Rule(
            "R11",
            "each evaluation span carries exactly one assesses link targeting an "
            "agent, planning, or workflow span (lenient: at most one)",
            "Evaluation spans assess either a specific agent, a plan or a single "
            "workflow.",
            _r11_assesses,
        ),
        _Rule(
            "R12",
            "every span has a span_end (checked in complete mode)",
            "Completed-trace audits must not contain spans that never closed.",
            _r12_completion,
        ),
        _Rule(
            "R13",
            "payload fields match the span kind's schema; strict mode rejects "
            "unknown payload fields",
            "Each span kind carries only its declared metadata attributes.",
            _r13_payload_schema,
        ),
    )
}


def validate(trace: Trace, config: ValidatorConfig | None = None) -> ValidationReport:
    """Run every enabled rule over the trace and report all findings.

    Pure and deterministic: the same trace and config always produce a
    byte-identical report (violations sorted by rule id, then first span id).
    """
    config = config or ValidatorConfig()
    checked = [rid for rid in RULE_IDS if rid not in config.disabled_rules]
    violations: list[Violation] = []
    for rule_id in checked:
        violations.extend(RULES[rule_id].check(trace, config))
    violations.sort(key=lambda v: (v.rule_id, v.span_ids[0] if v.span_ids else ""))
    return ValidationReport(
        trace_id=trace.trace_id,
        mode=config.mode,
        violations=violations,
        checked_rules=checked,
    )


def explain_rule(rule_id: str) -> RuleDoc:
    """Return the rule's description and rationale for CLI help."""
    rule = RULES.get(rule_id)
    if rule is None:
        raise UnknownRule(f"unknown rule {rule_id!r}")
    return RuleDoc(rule.rule_id, rule.description, rule.rationale)


def all_rule_docs() -> list[RuleDoc]:
    return [explain_rule(rid) for rid in RULE_IDS]
