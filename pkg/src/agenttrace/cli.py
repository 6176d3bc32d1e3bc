"""Command-line entry point wiring collector, store, validator, and analytics.

Exit codes are stable across commands: 0 success/conforming, 1 violations
found or an empty result where one was required, 2 usage error, 3 I/O or
service error. Machine output (--format json) is canonical serialization.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import urllib.request
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .analytics import (
    PriceTable,
    combine_costs,
    compute_cost,
    extract_trajectory,
    guardrail_audit,
    latency_stats,
    trajectory_similarity,
)
from .canonical import canonical_serialize
from .collector import CollectorConfig, CollectorService, make_server
from .errors import (
    AgentTraceError,
    EmptyInput,
    EmptyName,
    NotAWorkflow,
    SpanNotFound,
    TraceNotFound,
    UnknownRule,
)
from .model import (
    Record,
    Span,
    Trace,
    assemble_trace,
    group_records_by_trace,
    is_valid_trace_id,
    parse_record,
)
from .simulator import ShapeConfig, generate, mutate
from .store import QueryFilter, Store
from .validator import (
    RULE_IDS,
    ValidatorConfig,
    all_rule_docs,
    explain_rule,
    validate,
)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_DATA_DIR = "agenttrace-data"


def _env_data_dir() -> str:
    return os.environ.get("AGENTTRACE_DATA_DIR", DEFAULT_DATA_DIR)


def _env_port() -> int:
    return int(os.environ.get("AGENTTRACE_PORT", "4318"))


def _table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    rows = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def _ms(duration_ns: int | None) -> str:
    if duration_ns is None:
        return "open"
    return f"{duration_ns / 1e6:.3f}ms"


def _print_json(payload: Any) -> None:
    print(canonical_serialize(payload))


def _read_records(path: str) -> list[Record]:
    with open(path, "r", encoding="utf-8") as handle:
        return [parse_record(line) for line in handle if line.strip()]


# ---------------------------------------------------------------------------
# Commands


def _cmd_serve(args: argparse.Namespace) -> int:
    config = CollectorConfig(
        data_dir=args.data_dir, host=args.host, port=args.port
    )
    server = make_server(config)
    host, port = server.server_address[:2]
    print(
        f"collector listening on {host}:{port}, data dir {args.data_dir}",
        flush=True,
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
        server.service.store.close()
    return EXIT_OK


def _cmd_ingest(args: argparse.Namespace) -> int:
    url = args.url or (
        None if args.data_dir_given else os.environ.get("AGENTTRACE_COLLECTOR_URL")
    )
    if url:
        with open(args.file, "rb") as handle:
            body = handle.read()
        request = urllib.request.Request(
            url.rstrip("/") + "/v1/traces",
            data=body,
            headers={"Content-Type": "application/x-ndjson"},
            method="POST",
        )
        with urllib.request.urlopen(request) as response:
            payload = json.loads(response.read().decode("utf-8"))
        if args.format == "json":
            _print_json(payload)
        else:
            print(f"accepted {payload['accepted']}, rejected {payload['rejected']}")
        return EXIT_OK
    with Store(args.data_dir) as store:
        service = CollectorService(store)
        summary = service.ingest_file(args.file)
    if args.format == "json":
        _print_json(summary)
    else:
        print(f"accepted {summary.accepted}, rejected {summary.rejected}")
        for reject in summary.rejects:
            print(f"  line {reject.line_number}: {reject.reason}", file=sys.stderr)
    return EXIT_OK


def _validator_config(args: argparse.Namespace) -> ValidatorConfig:
    return ValidatorConfig(
        mode=args.mode,
        containment_epsilon_ns=args.epsilon_ns,
        disabled_rules=frozenset(args.disable_rule or ()),
    )


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _validator_config(args)
    if is_valid_trace_id(args.target) and not Path(args.target).exists():
        with Store(args.data_dir) as store:
            traces = [store.get_trace(args.target)]
    else:
        records = _read_records(args.target)
        groups = group_records_by_trace(records)
        traces = [assemble_trace(records) for records in groups.values()]
        traces.sort(key=lambda t: t.trace_id)
    reports = [validate(trace, config) for trace in traces]
    if args.format == "json":
        _print_json([r.to_dict() for r in reports])
    else:
        total = 0
        for report in reports:
            for violation in report.violations:
                total += 1
                spans = ",".join(violation.span_ids)
                print(f"{report.trace_id}  {violation.rule_id}  [{spans}]  {violation.message}")
        print(
            f"checked {len(reports)} trace(s), mode {config.mode}: "
            f"{total} violation(s)"
        )
    return EXIT_VIOLATIONS if any(r.violations for r in reports) else EXIT_OK


def _render_tree(trace: Trace, span: Span, depth: int, lines: list[str]) -> None:
    indent = "  " * depth
    lines.append(
        f"{indent}{span.kind.value}  {span.name}  {_ms(span.duration_ns)}"
        + (f"  [{span.status}]" if span.status == "error" else "")
    )
    for child in trace.children_of(span.span_id):
        _render_tree(trace, child, depth + 1, lines)


def _cmd_show(args: argparse.Namespace) -> int:
    with Store(args.data_dir) as store:
        trace = store.get_trace(args.trace_id)
    if args.format == "json":
        _print_json(trace)
        return EXIT_OK
    if args.tree:
        lines: list[str] = []
        for root_id in trace.root_span_ids:
            _render_tree(trace, trace.spans[root_id], 0, lines)
        print("\n".join(lines))
    else:
        rows = [
            (
                s.span_id,
                s.kind.value,
                s.name,
                s.status or "open",
                _ms(s.duration_ns),
            )
            for s in sorted(
                trace.spans.values(), key=lambda s: (s.start_time_unix_ns, s.span_id)
            )
        ]
        print(_table(("span_id", "kind", "name", "status", "duration"), rows))
    if trace.feedback:
        print("feedback:")
        for score in trace.feedback:
            print(f"  {score.source}  {score.name}={score.value!r}")
    return EXIT_OK


def _cmd_query(args: argparse.Namespace) -> int:
    query = QueryFilter(
        has_error=True if args.has_error else None,
        min_duration_ns=(
            int(args.min_duration_ms * 1_000_000)
            if args.min_duration_ms is not None
            else None
        ),
        kind=args.kind,
        name_contains=args.name_contains,
        since_unix_ns=args.since_ns,
        until_unix_ns=args.until_ns,
    )
    with Store(args.data_dir) as store:
        summaries = store.query_traces(query)
    if args.format == "json":
        _print_json([s.to_dict() for s in summaries])
    else:
        rows = [
            (
                s.trace_id,
                s.root_kind,
                s.root_name,
                s.span_count,
                "yes" if s.has_error else "no",
                _ms(s.duration_ns),
                s.input_tokens,
                s.output_tokens,
            )
            for s in summaries
        ]
        print(
            _table(
                ("trace_id", "kind", "root", "spans", "error", "duration", "in_tok", "out_tok"),
                rows,
            )
        )
    return EXIT_OK


def _cmd_report_cost(args: argparse.Namespace) -> int:
    prices = PriceTable.load(args.prices)
    with Store(args.data_dir) as store:
        if args.trace:
            traces = [store.get_trace(args.trace)]
        else:
            traces = store.all_traces()
    breakdown = combine_costs(compute_cost(t, prices) for t in traces)
    if args.format == "json":
        _print_json(breakdown)
    else:
        rows = [
            (model, cost.input_tokens, cost.output_tokens, f"{float(cost.cost):.6f}")
            for model, cost in sorted(breakdown.per_model.items())
        ]
        print(_table(("model", "input_tokens", "output_tokens", "cost"), rows))
        print(f"total: {float(breakdown.total_cost):.6f} {breakdown.currency}")
    return EXIT_OK


def _cmd_report_latency(args: argparse.Namespace) -> int:
    percentiles = [int(p) for p in args.percentiles.split(",") if p]
    if not all(1 <= p <= 100 for p in percentiles):
        print("percentiles must be integers in 1..100", file=sys.stderr)
        return EXIT_USAGE
    with Store(args.data_dir) as store:
        summaries = store.query_traces()
    stats = latency_stats(summaries, percentiles)
    if args.format == "json":
        _print_json(stats)
    else:
        print(f"count: {stats.count}")
        print(f"mean:  {_ms(int(stats.mean_ns))}")
        for p, value in sorted(stats.percentiles.items()):
            print(f"p{p}:   {_ms(int(value))}")
    return EXIT_OK


def _cmd_trajectory(args: argparse.Namespace) -> int:
    with Store(args.data_dir) as store:
        trace = store.get_trace(args.trace_id)
    trajectory = extract_trajectory(trace, args.workflow)
    payload: dict[str, Any] = {"trace_id": args.trace_id, "trajectory": trajectory}
    exit_code = EXIT_OK
    if args.expected is not None:
        expected = [t for t in args.expected.split(",") if t]
        result = trajectory_similarity(expected, trajectory)
        payload["expected"] = expected
        payload["exact"] = result.exact
        payload["score"] = result.score
        if not result.exact:
            exit_code = EXIT_VIOLATIONS
    if args.format == "json":
        _print_json(payload)
    else:
        print(" -> ".join(trajectory) if trajectory else "(no tool spans)")
        if args.expected is not None:
            print(f"expected: {' -> '.join(payload['expected'])}")
            print(f"exact: {payload['exact']}  score: {payload['score']:.4f}")
    return exit_code


def _cmd_audit_guardrails(args: argparse.Namespace) -> int:
    with Store(args.data_dir) as store:
        traces = store.all_traces()
    report = guardrail_audit(traces)
    if args.format == "json":
        _print_json(report)
        return EXIT_OK
    lines = ["# Guardrail audit", "", "## Actions", "", "| action | count |", "| --- | --- |"]
    for action, count in sorted(report.action_counts.items()):
        lines.append(f"| {action} | {count} |")
    lines += ["", "## Target kinds", "", "| kind | count |", "| --- | --- |"]
    for kind, count in sorted(report.target_kind_counts.items()):
        lines.append(f"| {kind} | {count} |")
    lines += ["", "## Activations", "", "| trace | span | actions | targets | outcome |", "| --- | --- | --- | --- | --- |"]
    for entry in report.entries:
        lines.append(
            f"| {entry.trace_id} | {entry.span_id} | {','.join(entry.actions)} "
            f"| {','.join(entry.target_kinds)} | {entry.status} |"
        )
    if report.time_range:
        lines += ["", f"Time range: {report.time_range[0]} .. {report.time_range[1]}"]
    print("\n".join(lines))
    return EXIT_OK


def _cmd_prompts_register(args: argparse.Namespace) -> int:
    with open(args.file, "r", encoding="utf-8") as handle:
        template = handle.read()
    with Store(args.data_dir) as store:
        record = store.register_prompt(args.name, template)
    if args.format == "json":
        _print_json(record.to_dict())
    else:
        print(f"{record.name} version {record.version} ({record.content_hash})")
    return EXIT_OK


def _cmd_prompts_list(args: argparse.Namespace) -> int:
    with Store(args.data_dir) as store:
        prompts = store.list_prompts(args.name)
    if args.format == "json":
        _print_json([p.to_dict() for p in prompts])
    else:
        rows = [(p.name, p.version, p.content_hash) for p in prompts]
        print(_table(("name", "version", "content_hash"), rows))
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    shape = ShapeConfig(
        seed=args.seed,
        plans_per_agent=args.plans,
        tasks_per_workflow=args.tasks,
        tools_per_task=args.tools,
        llm_calls_per_task=args.llm_per_task,
        llm_calls_per_plan=args.llm_per_plan,
        kb_links=args.kb_links,
        guardrail_probability=args.guardrail_probability,
        error_probability=args.error_probability,
        include_evaluation=not args.no_evaluation,
    )
    total_records = 0
    with open(args.out, "w", encoding="utf-8") as handle:
        for offset in range(args.traces):
            records = generate(replace(shape, seed=shape.seed + offset))
            if args.mutate:
                records = mutate(records, args.mutate, seed=shape.seed + offset)
            for record in records:
                handle.write(canonical_serialize(record) + "\n")
            total_records += len(records)
    print(f"wrote {args.traces} trace(s), {total_records} record(s) to {args.out}")
    return EXIT_OK


def _cmd_rules(args: argparse.Namespace) -> int:
    docs = [explain_rule(args.rule_id)] if args.rule_id else all_rule_docs()
    if args.format == "json":
        _print_json([d.to_dict() for d in docs])
    else:
        for doc in docs:
            print(f"{doc.rule_id}: {doc.description}")
            print(f"     {doc.rationale}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_common(parser: argparse.ArgumentParser, *, formats=("table", "json")) -> None:
    parser.add_argument("--data-dir", default=None, help="data directory")
    parser.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agenttrace",
        description="Record, validate, store, query, and analyze agent traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the ingestion collector")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("ingest", help="ingest an NDJSON record file")
    p.add_argument("file")
    p.add_argument("--url", default=None, help="POST to a collector instead")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("validate", help="validate a record file or stored trace")
    p.add_argument("target", help="NDJSON file path or trace id")
    p.add_argument("--mode", choices=("strict", "lenient"), default="strict")
    p.add_argument("--epsilon-ns", type=int, default=1_000_000)
    p.add_argument("--disable-rule", action="append", choices=RULE_IDS, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("show", help="show one trace")
    p.add_argument("trace_id")
    p.add_argument("--tree", action="store_true", help="render the span hierarchy")
    _add_common(p)
    p.set_defaults(func=_cmd_show)

    p = sub.add_parser("query", help="list trace summaries")
    p.add_argument("--has-error", action="store_true")
    p.add_argument("--min-duration-ms", type=float, default=None)
    p.add_argument("--kind", default=None)
    p.add_argument("--name-contains", default=None)
    p.add_argument("--since-ns", type=int, default=None)
    p.add_argument("--until-ns", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_query)

    report = sub.add_parser("report", help="cost and latency reports")
    report_sub = report.add_subparsers(dest="report_command", required=True)

    p = report_sub.add_parser("cost", help="token spend per model")
    p.add_argument("--prices", required=True, help="price table JSON file")
    p.add_argument("--trace", default=None, help="limit to one trace id")
    _add_common(p)
    p.set_defaults(func=_cmd_report_cost)

    p = report_sub.add_parser("latency", help="nearest-rank latency percentiles")
    p.add_argument("--percentiles", default="50,90,99")
    _add_common(p)
    p.set_defaults(func=_cmd_report_latency)

    p = sub.add_parser("trajectory", help="tool-call path of a trace")
    p.add_argument("trace_id")
    p.add_argument("--workflow", default=None, help="limit to one workflow span")
    p.add_argument("--expected", default=None, help="comma-separated expected path")
    _add_common(p)
    p.set_defaults(func=_cmd_trajectory)

    audit = sub.add_parser("audit", help="audit reports")
    audit_sub = audit.add_subparsers(dest="audit_command", required=True)
    p = audit_sub.add_parser("guardrails", help="guardrail safety-case report")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--format", choices=("md", "json"), default="md")
    p.set_defaults(func=_cmd_audit_guardrails)

    prompts = sub.add_parser("prompts", help="prompt registry")
    prompts_sub = prompts.add_subparsers(dest="prompts_command", required=True)
    p = prompts_sub.add_parser("register", help="register a prompt template file")
    p.add_argument("name")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=_cmd_prompts_register)
    p = prompts_sub.add_parser("list", help="list registered prompts")
    p.add_argument("name", nargs="?", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_prompts_list)

    p = sub.add_parser("simulate", help="generate synthetic traces")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--traces", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--mutate", choices=RULE_IDS, default=None)
    p.add_argument("--plans", type=int, default=1)
    p.add_argument("--tasks", type=int, default=3)
    p.add_argument("--tools", type=int, default=1)
    p.add_argument("--llm-per-task", type=int, default=1)
    p.add_argument("--llm-per-plan", type=int, default=1)
    p.add_argument("--kb-links", type=int, default=1)
    p.add_argument("--guardrail-probability", type=float, default=0.2)
    p.add_argument("--error-probability", type=float, default=0.1)
    p.add_argument("--no-evaluation", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("rules", help="explain validation rules")
    p.add_argument("rule_id", nargs="?", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_rules)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    if hasattr(args, "data_dir"):
        args.data_dir_given = args.data_dir is not None
        if args.data_dir is None:
            args.data_dir = _env_data_dir()
    if getattr(args, "port", "missing") is None:
        args.port = _env_port()

    try:
        return args.func(args)
    except (EmptyName, UnknownRule) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceNotFound, SpanNotFound, NotAWorkflow, EmptyInput) as exc:
        # A lookup came back empty where a result was required. `validate`
        # reserves exit 1 for violations, so its missing target maps to 3.
        print(f"error: {exc}", file=sys.stderr)
        if getattr(args, "func", None) is _cmd_validate:
            return EXIT_IO
        return EXIT_VIOLATIONS
    except (AgentTraceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
