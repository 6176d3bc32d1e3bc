/**
 * Batched record export to an NDJSON file or the collector's HTTP endpoint.
 *
 * Records buffer until an explicit flush() or until the buffer reaches the
 * batch size. A failed HTTP flush keeps the buffer intact for retry.
 */

import { appendFileSync } from "node:fs";

import { ExportFailure } from "./errors.js";
import { serializeRecord, WireRecord } from "./records.js";

export const DEFAULT_BATCH_SIZE = 100;
export const DEFAULT_COLLECTOR_URL = "http://127.0.0.1:4318";

export interface RejectedLine {
  line_number: number;
  reason: string;
}

/** Mirrors the collector's ingest summary; file mode accepts everything. */
export interface ExportSummary {
  accepted: number;
  rejected: number;
  rejects: RejectedLine[];
}

export interface Exporter {
  enqueue(record: WireRecord): void;
  flush(): Promise<ExportSummary>;
  pending(): number;
}

export interface ExporterOptions {
  batchSize?: number;
}

abstract class BufferedExporter implements Exporter {
  protected buffer: WireRecord[] = [];
  protected readonly batchSize: number;
  private chain: Promise<unknown> = Promise.resolve();

  constructor(options: ExporterOptions = {}) {
    this.batchSize = options.batchSize ?? DEFAULT_BATCH_SIZE;
  }

  enqueue(record: WireRecord): void {
    this.buffer.push(record);
    if (this.buffer.length >= this.batchSize) {
      this.autoFlush();
    }
  }

  /** Batch-size trigger; failures keep the buffer for the next flush. */
  protected autoFlush(): void {
    void this.flush().catch(() => undefined);
  }

  pending(): number {
    return this.buffer.length;
  }

  /** Flushes are serialized: buffer access stays mutually exclusive. */
  flush(): Promise<ExportSummary> {
    const next = this.chain.then(() => this.flushNow());
    this.chain = next.catch(() => undefined);
    return next;
  }

  protected abstract flushNow(): Promise<ExportSummary>;
}

export class FileExporter extends BufferedExporter {
  constructor(readonly path: string, options: ExporterOptions = {}) {
    super(options);
  }

  /** File appends are synchronous, so batch boundaries write through. */
  protected override autoFlush(): void {
    this.flushSync();
  }

  flushSync(): ExportSummary {
    const batch = this.buffer.splice(0, this.buffer.length);
    if (batch.length > 0) {
      const lines = batch.map((r) => serializeRecord(r) + "\n").join("");
      try {
        appendFileSync(this.path, lines, "utf-8");
      } catch (error) {
        this.buffer.unshift(...batch);
        throw new ExportFailure(`cannot append to ${this.path}`, error);
      }
    }
    return { accepted: batch.length, rejected: 0, rejects: [] };
  }

  protected async flushNow(): Promise<ExportSummary> {
    return this.flushSync();
  }
}

export class HttpExporter extends BufferedExporter {
  readonly url: string;

  constructor(url?: string, options: ExporterOptions = {}) {
    super(options);
    const base = url ?? process.env.AGENTTRACE_COLLECTOR_URL ?? DEFAULT_COLLECTOR_URL;
    this.url = base.replace(/\/+$/, "");
  }

  protected async flushNow(): Promise<ExportSummary> {
    if (this.buffer.length === 0) {
      return { accepted: 0, rejected: 0, rejects: [] };
    }
    const batch = this.buffer.slice();
    const body = batch.map((r) => serializeRecord(r) + "\n").join("");
    let response: Response;
    try {
      response = await fetch(`${this.url}/v1/traces`, {
        method: "POST",
        headers: { "Content-Type": "application/x-ndjson" },
        body,
      });
    } catch (error) {
      throw new ExportFailure(`POST ${this.url}/v1/traces failed`, error);
    }
    if (!response.ok) {
      throw new ExportFailure(
        `collector responded ${response.status} ${response.statusText}`,
      );
    }
    const summary = (await response.json()) as ExportSummary;
    this.buffer.splice(0, batch.length);
    return summary;
  }
}

/** Best-effort flush when the process exits (sync path only). */
export function installExitHook(exporter: Exporter): void {
  process.once("beforeExit", () => {
    void exporter.flush().catch(() => undefined);
  });
}
