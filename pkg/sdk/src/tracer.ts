/**
 * Span lifecycle tracking with an ambient current-span scope.
 *
 * startSpan nests under the innermost open span unless an explicit parent
 * (or null, for a new root/trace) is given. Ending a span force-closes any
 * children still open, so emitted parent windows always contain child
 * windows. Timestamps are strictly monotone per tracer. Handles are not
 * safe to share across concurrent execution contexts.
 */

import { AlreadyClosed, PayloadKindMismatch } from "./errors.js";
import { Exporter } from "./exporter.js";
import { newSpanId, newTraceId } from "./ids.js";
import {
  ErrorInfo,
  FeedbackSource,
  JsonValue,
  PAYLOAD_FIELDS,
  Relation,
  SpanKind,
  SpanStatus,
  WireRecord,
} from "./records.js";

export type NowNs = () => bigint;

function wallClockNs(): bigint {
  return BigInt(Date.now()) * 1_000_000n;
}

export class SpanHandle {
  closed = false;
  readonly children: SpanHandle[] = [];

  constructor(
    readonly traceId: string,
    readonly spanId: string,
    readonly parentId: string | null,
    readonly kind: SpanKind,
    readonly name: string,
  ) {}
}

export interface StartSpanOptions {
  /** Explicit parent; null starts a new root span (and a new trace). */
  parent?: SpanHandle | null;
  inputs?: JsonValue;
}

export interface EndSpanOptions {
  status?: SpanStatus;
  outputs?: JsonValue;
  metrics?: Record<string, number | bigint>;
  error?: ErrorInfo;
}

export interface LinkTarget {
  span?: SpanHandle;
  targetSpanId?: string;
  targetTraceId?: string;
  resource?: string;
}

export interface FeedbackOptions {
  source: FeedbackSource;
  name: string;
  value: number | string;
  span?: SpanHandle;
  traceId?: string;
  comment?: string;
}

export class Tracer {
  private readonly stack: SpanHandle[] = [];
  private lastNs = 0n;

  constructor(
    private readonly exporter: Exporter,
    private readonly wallClock: NowNs = wallClockNs,
  ) {}

  private now(): bigint {
    const wall = this.wallClock();
    this.lastNs = wall > this.lastNs ? wall : this.lastNs + 1n;
    return this.lastNs;
  }

  private emit(record: WireRecord): void {
    this.exporter.enqueue(record);
  }

  /** The innermost open span, or null outside any scope. */
  current(): SpanHandle | null {
    return this.stack.length > 0 ? this.stack[this.stack.length - 1] : null;
  }

  startSpan(
    kind: SpanKind,
    name: string,
    payload: Record<string, JsonValue | undefined> = {},
    options: StartSpanOptions = {},
  ): SpanHandle {
    const allowed = PAYLOAD_FIELDS[kind];
    if (allowed === undefined) {
      throw new PayloadKindMismatch(String(kind), Object.keys(payload));
    }
    const strays = Object.keys(payload).filter((field) => !allowed.has(field));
    if (strays.length > 0) {
      throw new PayloadKindMismatch(kind, strays);
    }
    const parent = options.parent !== undefined ? options.parent : this.current();
    const handle = new SpanHandle(
      parent ? parent.traceId : newTraceId(),
      newSpanId(),
      parent ? parent.spanId : null,
      kind,
      name,
    );
    parent?.children.push(handle);
    this.stack.push(handle);
    this.emit({
      record_type: "span_start",
      trace_id: handle.traceId,
      span_id: handle.spanId,
      parent_id: handle.parentId,
      name,
      kind,
      start_time_unix_ns: this.now(),
      payload,
      ...(options.inputs !== undefined ? { inputs: options.inputs } : {}),
    });
    return handle;
  }

  endSpan(handle: SpanHandle, options: EndSpanOptions = {}): void {
    if (handle.closed) {
      throw new AlreadyClosed(handle.spanId);
    }
    for (const child of handle.children) {
      if (!child.closed) {
        this.endSpan(child);
      }
    }
    handle.closed = true;
    const index = this.stack.lastIndexOf(handle);
    if (index !== -1) {
      this.stack.splice(index, 1);
    }
    const status = options.status ?? "ok";
    this.emit({
      record_type: "span_end",
      trace_id: handle.traceId,
      span_id: handle.spanId,
      end_time_unix_ns: this.now(),
      status,
      metrics: options.metrics ?? {},
      ...(options.error !== undefined ? { error: options.error } : {}),
      ...(options.outputs !== undefined ? { outputs: options.outputs } : {}),
    });
  }

  addEvent(
    handle: SpanHandle,
    name: string,
    attributes: Record<string, JsonValue | undefined> = {},
  ): void {
    if (handle.closed) {
      throw new AlreadyClosed(handle.spanId);
    }
    this.emit({
      record_type: "event",
      trace_id: handle.traceId,
      span_id: handle.spanId,
      time_unix_ns: this.now(),
      name,
      attributes,
    });
  }

  addLink(handle: SpanHandle, relation: Relation, target: LinkTarget): void {
    if (handle.closed) {
      throw new AlreadyClosed(handle.spanId);
    }
    const targetSpanId = target.span ? target.span.spanId : target.targetSpanId;
    if ((targetSpanId === undefined) === (target.resource === undefined)) {
      throw new Error("link target requires exactly one of span or resource");
    }
    this.emit({
      record_type: "link",
      trace_id: handle.traceId,
      span_id: handle.spanId,
      relation,
      ...(target.targetTraceId !== undefined
        ? { target_trace_id: target.targetTraceId }
        : {}),
      ...(targetSpanId !== undefined ? { target_span_id: targetSpanId } : {}),
      ...(target.resource !== undefined ? { resource: target.resource } : {}),
    });
  }

  recordFeedback(options: FeedbackOptions): void {
    const traceId = options.span?.traceId ?? options.traceId;
    if (traceId === undefined) {
      throw new Error("feedback requires a span or an explicit traceId");
    }
    this.emit({
      record_type: "feedback",
      trace_id: traceId,
      ...(options.span !== undefined ? { span_id: options.span.spanId } : {}),
      source: options.source,
      name: options.name,
      value: options.value,
      ...(options.comment !== undefined ? { comment: options.comment } : {}),
      time_unix_ns: this.now(),
    });
  }

  /** End any spans still open (outermost last) and flush the exporter. */
  async shutdown() {
    while (this.stack.length > 0) {
      const outermost = this.stack[0];
      this.endSpan(outermost);
    }
    return this.exporter.flush();
  }
}
