/** Run the toy agent against a live collector (AGENTTRACE_COLLECTOR_URL). */

import { HttpExporter } from "./exporter.js";
import { runToyAgent } from "./demo.js";
import { Tracer } from "./tracer.js";

async function main(): Promise<void> {
  const exporter = new HttpExporter();
  const tracer = new Tracer(exporter);
  const run = runToyAgent(tracer);
  const summary = await exporter.flush();
  console.log(
    `trace ${run.traceId}: accepted ${summary.accepted}, rejected ${summary.rejected}`,
  );
  if (summary.rejected > 0) {
    process.exitCode = 1;
  }
}

main().catch((error) => {
  console.error(error instanceof Error ? error.message : error);
  process.exitCode = 1;
});
