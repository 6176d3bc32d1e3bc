import { randomBytes } from "node:crypto";

const ZERO_TRACE_ID = "0".repeat(32);
const ZERO_SPAN_ID = "0".repeat(16);

/** 16 random bytes as 32 lowercase hex chars (never all-zero). */
export function newTraceId(): string {
  for (;;) {
    const id = randomBytes(16).toString("hex");
    if (id !== ZERO_TRACE_ID) {
      return id;
    }
  }
}

/** 8 random bytes as 16 lowercase hex chars (never all-zero). */
export function newSpanId(): string {
  for (;;) {
    const id = randomBytes(8).toString("hex");
    if (id !== ZERO_SPAN_ID) {
      return id;
    }
  }
}
