export class PayloadKindMismatch extends Error {
  constructor(kind: string, fields: string[]) {
    super(`payload fields [${fields.join(", ")}] do not belong to kind '${kind}'`);
    this.name = "PayloadKindMismatch";
  }
}

export class AlreadyClosed extends Error {
  constructor(spanId: string) {
    super(`span ${spanId} is already closed`);
    this.name = "AlreadyClosed";
  }
}

export class ExportFailure extends Error {
  constructor(message: string, readonly cause?: unknown) {
    super(message);
    this.name = "ExportFailure";
  }
}
