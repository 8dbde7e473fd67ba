#!/usr/bin/env node
import { parseArgs } from "node:util";

import { InputError, loadDataset, loadTask, writeScores } from "./io.js";
import { loadModel } from "./model.js";
import { scoreDataset, TokenizationMismatch, type Aggregate, type Mode } from "./scoring.js";

const USAGE = [
  "usage: prompt-scorer score --dataset FILE --task FILE --out FILE",
  "                           [--mode single|multi:avg|multi:max|multi:sum]",
  "                           [--model stub|stub:SEED|table:FILE]",
].join("\n");

class UsageError extends Error {}

function parseMode(raw: string): { mode: Mode; agg: Aggregate } {
  if (raw === "single") {
    return { mode: "single", agg: "avg" };
  }
  if (raw === "multi:avg" || raw === "multi:max" || raw === "multi:sum") {
    return { mode: "multi", agg: raw.slice("multi:".length) as Aggregate };
  }
  throw new UsageError(`bad --mode "${raw}"`);
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "score") {
    throw new UsageError(command === undefined ? "missing command" : `unknown command "${command}"`);
  }
  const { values } = parseArgs({
    args: rest,
    options: {
      dataset: { type: "string" },
      task: { type: "string" },
      out: { type: "string" },
      mode: { type: "string", default: "single" },
      model: { type: "string", default: "stub" },
    },
  });
  if (values.dataset === undefined || values.task === undefined || values.out === undefined) {
    throw new UsageError("--dataset, --task, and --out are required");
  }
  const { mode, agg } = parseMode(values.mode as string);
  const task = loadTask(values.task);
  const examples = loadDataset(values.dataset, task);
  const model = loadModel(values.model as string);
  const records = scoreDataset(model, task, examples, mode, agg);
  writeScores(values.out, records);
  console.log(`scored ${records.length} examples -> ${values.out}`);
  return 0;
}

try {
  process.exit(main(process.argv.slice(2)));
} catch (err) {
  if (err instanceof UsageError || (err as { code?: string }).code?.startsWith("ERR_PARSE_ARGS") === true) {
    console.error(`${USAGE}\n${(err as Error).message}`);
    process.exit(2);
  }
  const name = err instanceof InputError || err instanceof TokenizationMismatch ? err.constructor.name : "Error";
  console.error(JSON.stringify({ error: name, message: (err as Error).message }));
  process.exit(1);
}
