/**
 * Wire-record types and canonical NDJSON serialization.
 *
 * One JSON record per line, UTF-8. Timestamps are integer nanoseconds
 * since the Unix epoch, carried as bigint because they exceed
 * Number.MAX_SAFE_INTEGER; the serializer emits them as plain integer
 * literals. Keys are emitted sorted with no insignificant whitespace so
 * output matches the collector's canonical form.
 */

export type SpanKind =
  | "agent"
  | "reasoning"
  | "planning"
  | "workflow"
  | "task"
  | "tool"
  | "evaluation"
  | "guardrail"
  | "llm";

export type Relation =
  | "generates"
  | "realized_by"
  | "assesses"
  | "monitors"
  | "uses_knowledge_base"
  | "calls";

export type SpanStatus = "ok" | "error";
export type FeedbackSource = "explicit" | "implicit";

export type JsonValue =
  | null
  | boolean
  | number
  | bigint
  | string
  | JsonValue[]
  | { [key: string]: JsonValue | undefined };

export interface ErrorInfo {
  type: string;
  message: string;
  traceback?: string;
}

export interface SpanStartRecord {
  record_type: "span_start";
  trace_id: string;
  span_id: string;
  parent_id: string | null;
  name: string;
  kind: SpanKind;
  start_time_unix_ns: bigint;
  payload: Record<string, JsonValue | undefined>;
  inputs?: JsonValue;
}

export interface SpanEndRecord {
  record_type: "span_end";
  trace_id: string;
  span_id: string;
  end_time_unix_ns: bigint;
  status: SpanStatus;
  metrics: Record<string, number | bigint>;
  error?: ErrorInfo;
  outputs?: JsonValue;
}

export interface EventRecord {
  record_type: "event";
  trace_id: string;
  span_id: string;
  time_unix_ns: bigint;
  name: string;
  attributes: Record<string, JsonValue | undefined>;
}

export interface LinkRecord {
  record_type: "link";
  trace_id: string;
  span_id: string;
  relation: Relation;
  target_trace_id?: string;
  target_span_id?: string;
  resource?: string;
}

export interface FeedbackRecord {
  record_type: "feedback";
  trace_id: string;
  span_id?: string;
  source: FeedbackSource;
  name: string;
  value: number | string;
  comment?: string;
  time_unix_ns: bigint;
}

export type WireRecord =
  | SpanStartRecord
  | SpanEndRecord
  | EventRecord
  | LinkRecord
  | FeedbackRecord;

/** Payload fields each span kind may carry; anything else is a mismatch. */
export const PAYLOAD_FIELDS: Record<SpanKind, ReadonlySet<string>> = {
  agent: new Set(["role", "persona"]),
  reasoning: new Set(["context", "retrieved_knowledge", "inference_rules", "outcome"]),
  planning: new Set(["goal", "constraints", "context", "historical_plans"]),
  workflow: new Set(["task_dependencies", "operational_context", "past_execution_history"]),
  task: new Set(["description", "status"]),
  tool: new Set(["tool_name", "tool_version", "configuration"]),
  evaluation: new Set(["test_cases", "testing_metrics", "testing_results", "eval_mode"]),
  guardrail: new Set(["actions", "targets"]),
  llm: new Set(["model_name", "model_version", "parameters", "prompt_name", "prompt_version"]),
};

export const SPAN_KINDS = Object.keys(PAYLOAD_FIELDS) as SpanKind[];

/** Canonical JSON: sorted keys, no whitespace, bigint as integer literals. */
export function canonicalJson(value: JsonValue | undefined): string {
  if (value === null || value === undefined) {
    return "null";
  }
  switch (typeof value) {
    case "bigint":
      return value.toString();
    case "number":
      if (!Number.isFinite(value)) {
        throw new Error("cannot serialize non-finite number");
      }
      return JSON.stringify(value);
    case "string":
    case "boolean":
      return JSON.stringify(value);
    case "object": {
      if (Array.isArray(value)) {
        return `[${value.map((item) => canonicalJson(item)).join(",")}]`;
      }
      const entries = Object.keys(value)
        .filter((key) => value[key] !== undefined)
        .sort()
        .map((key) => `${JSON.stringify(key)}:${canonicalJson(value[key])}`);
      return `{${entries.join(",")}}`;
    }
    default:
      throw new Error(`cannot serialize ${typeof value}`);
  }
}

export function serializeRecord(record: WireRecord): string {
  return canonicalJson(record as unknown as JsonValue);
}
