/**
 * A scripted toy agent instrumented with the SDK: one agent span, a
 * reasoning -> planning -> workflow chain with two tasks (each running a
 * tool and an llm call), one guardrail, one evaluation, and one explicit
 * feedback score. The resulting trace passes strict validation on the
 * collector side, and its trajectory equals TOOL_ORDER.
 */

import { Tracer } from "./tracer.js";

export const TOOL_ORDER = ["search", "calculator"] as const;

export interface ToyAgentRun {
  traceId: string;
  toolOrder: string[];
  recordCount: number;
}

export function runToyAgent(tracer: Tracer): ToyAgentRun {
  const agent = tracer.startSpan(
    "agent",
    "toy_agent",
    { role: "assistant", persona: "cheerful" },
    { inputs: { goal: "add the first two search hits" } },
  );
  tracer.addLink(agent, "uses_knowledge_base", { resource: "kb://docs" });

  const reasoning = tracer.startSpan("reasoning", "think", {
    context: "user wants a sum from search results",
    retrieved_knowledge: "style notes from kb://docs",
    inference_rules: "search before calculating",
    outcome: "two-step plan: search, then add",
  });
  const planning = tracer.startSpan(
    "planning",
    "plan",
    {
      goal: "add the first two search hits",
      constraints: ["two steps max"],
      context: "fresh session",
      historical_plans: [],
    },
    { parent: agent },
  );
  tracer.addLink(reasoning, "generates", { span: planning });
  tracer.endSpan(reasoning);

  const workflow = tracer.startSpan(
    "workflow",
    "execute",
    { operational_context: "demo sandbox" },
    { parent: agent },
  );
  tracer.addLink(planning, "realized_by", { span: workflow });
  tracer.endSpan(planning);

  const taskSpecs: Array<{ tool: (typeof TOOL_ORDER)[number]; description: string }> = [
    { tool: "search", description: "find the two numbers" },
    { tool: "calculator", description: "add them up" },
  ];
  let firstToolSpanId: string | undefined;
  for (const spec of taskSpecs) {
    const task = tracer.startSpan(
      "task",
      `run_${spec.tool}`,
      { description: spec.description, status: "completed" },
      { parent: workflow },
    );
    tracer.addEvent(task, "status", { status: "pending" });
    tracer.addEvent(task, "status", { status: "in_progress" });
    const tool = tracer.startSpan("tool", spec.tool, {
      tool_name: spec.tool,
      tool_version: "1.0",
      configuration: { timeout_s: 10 },
    });
    firstToolSpanId = firstToolSpanId ?? tool.spanId;
    tracer.endSpan(tool, { outputs: { result: `${spec.tool} done` } });
    const llm = tracer.startSpan("llm", `${spec.tool}_llm`, {
      model_name: "orion-mini",
      model_version: "2024.6",
      parameters: { temperature: 0, max_tokens: 128 },
      prompt_name: "toolcaller",
      prompt_version: 1,
    });
    tracer.endSpan(llm, {
      metrics: { input_tokens: 64, output_tokens: 16 },
      outputs: { text: `call ${spec.tool}` },
    });
    tracer.addEvent(task, "status", { status: "completed" });
    tracer.endSpan(task);
  }
  tracer.endSpan(workflow);

  const evaluation = tracer.startSpan(
    "evaluation",
    "check_path",
    {
      test_cases: ["tool order"],
      testing_metrics: { steps: 2 },
      testing_results: "took the expected path",
      eval_mode: "trajectory",
    },
    { parent: agent },
  );
  tracer.addLink(evaluation, "assesses", { span: agent });
  tracer.endSpan(evaluation);

  const guardrail = tracer.startSpan(
    "guardrail",
    "tool_allowlist",
    { actions: ["validation"], targets: firstToolSpanId ? [firstToolSpanId] : [] },
    { parent: agent },
  );
  if (firstToolSpanId !== undefined) {
    tracer.addLink(guardrail, "monitors", { targetSpanId: firstToolSpanId });
  }
  tracer.endSpan(guardrail);

  tracer.recordFeedback({
    span: agent,
    source: "explicit",
    name: "thumb",
    value: 1,
    comment: "did the math",
  });
  tracer.endSpan(agent, { outputs: { result: "sum delivered" } });

  // 12 spans (start+end each) + 6 status events + 5 links + 1 feedback
  const recordCount = 12 * 2 + 6 + 5 + 1;
  return { traceId: agent.traceId, toolOrder: [...TOOL_ORDER], recordCount };
}
