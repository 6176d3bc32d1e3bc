export {
  canonicalJson,
  serializeRecord,
  PAYLOAD_FIELDS,
  SPAN_KINDS,
} from "./records.js";
export type {
  ErrorInfo,
  EventRecord,
  FeedbackRecord,
  FeedbackSource,
  JsonValue,
  LinkRecord,
  Relation,
  SpanEndRecord,
  SpanKind,
  SpanStartRecord,
  SpanStatus,
  WireRecord,
} from "./records.js";
export { newSpanId, newTraceId } from "./ids.js";
export { AlreadyClosed, ExportFailure, PayloadKindMismatch } from "./errors.js";
export {
  DEFAULT_BATCH_SIZE,
  DEFAULT_COLLECTOR_URL,
  FileExporter,
  HttpExporter,
  installExitHook,
} from "./exporter.js";
export type { Exporter, ExporterOptions, ExportSummary, RejectedLine } from "./exporter.js";
export { SpanHandle, Tracer } from "./tracer.js";
export type {
  EndSpanOptions,
  FeedbackOptions,
  LinkTarget,
  NowNs,
  StartSpanOptions,
} from "./tracer.js";
export { runToyAgent, TOOL_ORDER } from "./demo.js";
export type { ToyAgentRun } from "./demo.js";
