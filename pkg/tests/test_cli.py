"""CLI command behavior and the exit-code contract."""

from __future__ import annotations

import json

import pytest

from agenttrace.canonical import canonical_serialize
from agenttrace.cli import main
from agenttrace.simulator import ShapeConfig, generate

from helpers import TRACE_ID, taxonomy_records


@pytest.fixture
def data_dir(tmp_path):
    return str(tmp_path / "data")


@pytest.fixture
def corpus_file(tmp_path, record_lines):
    path = tmp_path / "corpus.ndjson"
    lines = "".join(record_lines(generate(ShapeConfig(seed=s))) for s in range(3))
    path.write_text(lines, encoding="utf-8")
    return str(path)


@pytest.fixture
def loaded(data_dir, corpus_file):
    assert main(["ingest", corpus_file, "--data-dir", data_dir]) == 0
    return data_dir


def _json_out(capsys):
    out = capsys.readouterr().out.strip()
    payload = json.loads(out)
    # canonical round-trip: re-serializing the parsed output is a no-op
    assert canonical_serialize(payload) == out
    return payload


# -- validate exit-code contract -------------------------------------------------


def test_validate_conforming_file_exits_0(tmp_path, record_lines, capsys):
    path = tmp_path / "ok.ndjson"
    path.write_text(record_lines(taxonomy_records()), encoding="utf-8")
    assert main(["validate", str(path)]) == 0
    assert "0 violation(s)" in capsys.readouterr().out


def test_validate_violating_file_exits_1(tmp_path, record_lines, capsys):
    records = taxonomy_records()
    # drop the final span_end so the agent span never closes (R12)
    path = tmp_path / "bad.ndjson"
    path.write_text(record_lines(records[:-1]), encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    assert "R12" in capsys.readouterr().out


def test_validate_usage_error_exits_2(capsys):
    assert main(["validate", "x.ndjson", "--mode", "bogus"]) == 2


def test_validate_missing_file_exits_3(capsys):
    assert main(["validate", "definitely-missing.ndjson"]) == 3
    assert "error" in capsys.readouterr().err


def test_validate_json_output(tmp_path, record_lines, capsys):
    path = tmp_path / "ok.ndjson"
    path.write_text(record_lines(taxonomy_records()), encoding="utf-8")
    assert main(["validate", str(path), "--format", "json"]) == 0
    reports = _json_out(capsys)
    assert reports[0]["trace_id"] == TRACE_ID
    assert reports[0]["violations"] == []
    assert reports[0]["mode"] == "strict"


def test_validate_lenient_and_disable_rule(tmp_path, record_lines, capsys):
    path = tmp_path / "open.ndjson"
    path.write_text(record_lines(taxonomy_records()[:-1]), encoding="utf-8")
    # open agent span: strict fails (R12), lenient passes
    assert main(["validate", str(path), "--mode", "lenient"]) == 0
    assert main(["validate", str(path), "--disable-rule", "R12"]) == 0


def test_validate_stored_trace_by_id(loaded, corpus_file, capsys):
    trace_id = json.loads(open(corpus_file).readline())["trace_id"]
    assert main(["validate", trace_id, "--data-dir", loaded]) == 0
    assert main(["validate", "ee" * 16, "--data-dir", loaded]) == 3


def test_validate_epsilon_flag(tmp_path, record_lines, capsys):
    from test_validator import _overrunning_task_records

    path = tmp_path / "late.ndjson"
    path.write_text(
        record_lines(_overrunning_task_records(overrun_ns=2_000_000)),
        encoding="utf-8",
    )
    assert main(["validate", str(path), "--epsilon-ns", "1000000"]) == 1
    assert main(["validate", str(path), "--epsilon-ns", "3000000"]) == 0


# -- simulate + closure -----------------------------------------------------------


def test_simulate_then_validate_closure(tmp_path, capsys):
    out = tmp_path / "t.ndjson"
    assert main(["simulate", "--seed", "7", "--traces", "2", "--out", str(out)]) == 0
    assert out.exists()
    assert main(["validate", str(out)]) == 0


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    for path in (a, b):
        assert main(["simulate", "--seed", "3", "--traces", "2", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_mutate_fails_validation(tmp_path, capsys):
    out = tmp_path / "bad.ndjson"
    assert (
        main(["simulate", "--seed", "7", "--traces", "1", "--out", str(out), "--mutate", "R06"])
        == 0
    )
    assert main(["validate", str(out)]) == 1
    assert "R06" in capsys.readouterr().out


def test_simulate_unknown_rule_is_usage_error(tmp_path):
    out = tmp_path / "x.ndjson"
    assert main(["simulate", "--seed", "1", "--out", str(out), "--mutate", "R99"]) == 2


# -- ingest / query / show ----------------------------------------------------------


def test_ingest_reports_counts(data_dir, corpus_file, capsys):
    assert main(["ingest", corpus_file, "--data-dir", data_dir, "--format", "json"]) == 0
    payload = _json_out(capsys)
    assert payload["rejected"] == 0
    assert payload["accepted"] > 0


def test_query_lists_traces(loaded, capsys):
    assert main(["query", "--data-dir", loaded, "--format", "json"]) == 0
    summaries = _json_out(capsys)
    assert len(summaries) == 3
    assert all(s["root_kind"] == "agent" for s in summaries)


def test_query_has_error_filter(loaded, capsys):
    assert main(["query", "--data-dir", loaded, "--format", "json"]) == 0
    everything = _json_out(capsys)
    assert main(["query", "--data-dir", loaded, "--has-error", "--format", "json"]) == 0
    erroring = _json_out(capsys)
    assert [s for s in everything if s["has_error"]] == erroring


def test_query_min_duration_ms(loaded, capsys):
    assert (
        main(["query", "--data-dir", loaded, "--min-duration-ms", "99999999", "--format", "json"])
        == 0
    )
    assert _json_out(capsys) == []


def test_show_table_tree_and_json(loaded, corpus_file, capsys):
    trace_id = json.loads(open(corpus_file).readline())["trace_id"]
    assert main(["show", trace_id, "--data-dir", loaded]) == 0
    table = capsys.readouterr().out
    assert "span_id" in table and "agent_run" in table
    assert main(["show", trace_id, "--data-dir", loaded, "--tree"]) == 0
    tree = capsys.readouterr().out
    assert "agent  agent_run" in tree
    assert "  workflow  " in tree  # indented child
    assert main(["show", trace_id, "--data-dir", loaded, "--format", "json"]) == 0
    payload = _json_out(capsys)
    assert payload["trace_id"] == trace_id


def test_show_unknown_trace_exits_1(loaded, capsys):
    assert main(["show", "ee" * 16, "--data-dir", loaded]) == 1


# -- reports ---------------------------------------------------------------------------


@pytest.fixture
def prices_file(tmp_path):
    path = tmp_path / "prices.json"
    path.write_text(
        json.dumps(
            {
                "currency": "USD",
                "models": {
                    "orion-mini": {"input_per_1k": 0.15, "output_per_1k": 0.6},
                    "orion-large": {"input_per_1k": 2.5, "output_per_1k": 10},
                    "pulsar-8b": {"input_per_1k": 0.05, "output_per_1k": 0.08},
                },
            }
        ),
        encoding="utf-8",
    )
    return str(path)


def test_report_cost(loaded, prices_file, capsys):
    assert (
        main(["report", "cost", "--prices", prices_file, "--data-dir", loaded, "--format", "json"])
        == 0
    )
    payload = _json_out(capsys)
    assert payload["currency"] == "USD"
    assert payload["total_cost"] > 0
    assert payload["total_cost"] == pytest.approx(
        sum(m["cost"] for m in payload["per_model"].values()), rel=1e-9
    )


def test_report_cost_missing_prices_file(loaded, capsys):
    assert (
        main(["report", "cost", "--prices", "missing.json", "--data-dir", loaded]) == 3
    )
    assert "error" in capsys.readouterr().err


def test_report_cost_unpriced_model(loaded, tmp_path, capsys):
    path = tmp_path / "partial.json"
    path.write_text(json.dumps({"currency": "USD", "models": {}}), encoding="utf-8")
    assert main(["report", "cost", "--prices", str(path), "--data-dir", loaded]) == 3


def test_report_latency(loaded, capsys):
    assert (
        main(["report", "latency", "--data-dir", loaded, "--percentiles", "50,90", "--format", "json"])
        == 0
    )
    payload = _json_out(capsys)
    assert payload["count"] == 3
    assert set(payload["percentiles"]) == {"50", "90"}


def test_report_latency_empty_store_exits_1(data_dir, capsys):
    assert main(["report", "latency", "--data-dir", data_dir]) == 1


# -- trajectory / audit / prompts / rules -------------------------------------------------


def test_trajectory_expected_match_and_mismatch(loaded, corpus_file, capsys):
    trace_id = json.loads(open(corpus_file).readline())["trace_id"]
    assert main(["trajectory", trace_id, "--data-dir", loaded, "--format", "json"]) == 0
    payload = _json_out(capsys)
    path = payload["trajectory"]
    assert main(
        ["trajectory", trace_id, "--data-dir", loaded, "--expected", ",".join(path), "--format", "json"]
    ) == 0
    payload = _json_out(capsys)
    assert payload["exact"] is True and payload["score"] == 1.0
    assert main(
        ["trajectory", trace_id, "--data-dir", loaded, "--expected", "nope", "--format", "json"]
    ) == 1


def test_audit_guardrails_formats(tmp_path, record_lines, capsys):
    data_dir = str(tmp_path / "d")
    path = tmp_path / "g.ndjson"
    lines = "".join(
        record_lines(generate(ShapeConfig(seed=s, guardrail_probability=1.0)))
        for s in range(2)
    )
    path.write_text(lines, encoding="utf-8")
    assert main(["ingest", str(path), "--data-dir", data_dir]) == 0
    capsys.readouterr()
    assert main(["audit", "guardrails", "--data-dir", data_dir, "--format", "json"]) == 0
    payload = _json_out(capsys)
    assert sum(payload["action_counts"].values()) >= 2
    assert main(["audit", "guardrails", "--data-dir", data_dir]) == 0
    md = capsys.readouterr().out
    assert md.startswith("# Guardrail audit")
    assert "| action | count |" in md


def test_prompts_register_and_list(data_dir, tmp_path, capsys):
    template = tmp_path / "greet.txt"
    template.write_text("Hello {name}", encoding="utf-8")
    assert main(["prompts", "register", "greet", str(template), "--data-dir", data_dir]) == 0
    assert "version 1" in capsys.readouterr().out
    template.write_text("Hi {name}", encoding="utf-8")
    assert main(["prompts", "register", "greet", str(template), "--data-dir", data_dir]) == 0
    assert "version 2" in capsys.readouterr().out
    assert main(["prompts", "list", "--data-dir", data_dir, "--format", "json"]) == 0
    prompts = _json_out(capsys)
    assert [p["version"] for p in prompts] == [1, 2]


def test_rules_help(capsys):
    assert main(["rules", "R06"]) == 0
    out = capsys.readouterr().out
    assert "A plan is realized as a single Workflow" in out
    assert main(["rules", "R06", "--format", "json"]) == 0
    docs = _json_out(capsys)
    assert docs[0]["rule_id"] == "R06"
    assert main(["rules"]) == 0
    assert len([l for l in capsys.readouterr().out.splitlines() if l.startswith("R")]) == 13
    assert main(["rules", "R99"]) == 2


def test_env_data_dir(tmp_path, corpus_file, monkeypatch, capsys):
    env_dir = tmp_path / "env-data"
    monkeypatch.setenv("AGENTTRACE_DATA_DIR", str(env_dir))
    assert main(["ingest", corpus_file]) == 0
    capsys.readouterr()
    assert (env_dir / "segments" / "000001.ndjson").exists()
    assert main(["query", "--format", "json"]) == 0
    assert len(_json_out(capsys)) == 3


def test_ingest_rejects_reported(data_dir, tmp_path, capsys):
    path = tmp_path / "mixed.ndjson"
    good = canonical_serialize(taxonomy_records()[0])
    path.write_text(good + "\nnot json\n", encoding="utf-8")
    assert main(["ingest", str(path), "--data-dir", data_dir, "--format", "json"]) == 0
    payload = _json_out(capsys)
    assert payload == {
        "accepted": 1,
        "rejected": 1,
        "rejects": [{"line_number": 2, "reason": payload["rejects"][0]["reason"]}],
    }


def test_read_commands_are_idempotent(loaded, prices_file, capsys):
    for argv in (
        ["query", "--data-dir", loaded, "--format", "json"],
        ["report", "latency", "--data-dir", loaded, "--format", "json"],
        ["report", "cost", "--prices", prices_file, "--data-dir", loaded, "--format", "json"],
        ["audit", "guardrails", "--data-dir", loaded, "--format", "json"],
    ):
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        assert capsys.readouterr().out == first


def test_validate_disabled_rules_surface_in_report(tmp_path, record_lines, capsys):
    path = tmp_path / "ok.ndjson"
    path.write_text(record_lines(taxonomy_records()), encoding="utf-8")
    assert main(["validate", str(path), "--disable-rule", "R03", "--format", "json"]) == 0
    reports = _json_out(capsys)
    assert "R03" not in reports[0]["checked_rules"]
    assert len(reports[0]["checked_rules"]) == 12
