import { readFileSync, writeFileSync } from "node:fs";

import { exampleSchema, taskSchema, type Example, type ScoreRecord, type TaskSpec } from "./types.js";

export class InputError extends Error {}

function firstIssue(error: { issues: { path: PropertyKey[]; message: string }[] }): string {
  const issue = error.issues[0];
  if (issue === undefined) {
    return "invalid";
  }
  const where = issue.path.map(String).join(".");
  return where.length > 0 ? `${where}: ${issue.message}` : issue.message;
}

export function loadTask(path: string): TaskSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new InputError(`task file ${path}: ${(err as Error).message}`);
  }
  const parsed = taskSchema.safeParse(raw);
  if (!parsed.success) {
    throw new InputError(`task file ${path}: ${firstIssue(parsed.error)}`);
  }
  return parsed.data;
}

/**
 * Read and validate a dataset before anything is scored.  Every line
 * must parse, match the example schema, carry a label the task
 * declares, and have the text fields the task's arity calls for.
 */
export function loadDataset(path: string, task: TaskSpec): Example[] {
  const labels = new Set(task.classes.map((cls) => cls.label));
  const examples: Example[] = [];
  const lines = readFileSync(path, "utf8").split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = (lines[i] as string).trim();
    if (line.length === 0) {
      continue;
    }
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch (err) {
      throw new InputError(`${path} line ${i + 1}: ${(err as Error).message}`);
    }
    const parsed = exampleSchema.safeParse(raw);
    if (!parsed.success) {
      throw new InputError(`${path} line ${i + 1}: ${firstIssue(parsed.error)}`);
    }
    const example = parsed.data;
    if (!labels.has(example.label)) {
      throw new InputError(
        `${path} line ${i + 1}: label "${example.label}" is not declared by task "${task.task}"`,
      );
    }
    if (task.arity === "pair" && example.input !== undefined) {
      throw new InputError(`${path} line ${i + 1}: pair task but the example has a plain input`);
    }
    if (task.arity === "single" && example.input === undefined) {
      throw new InputError(`${path} line ${i + 1}: single task but the example has hyp and prem`);
    }
    examples.push(example);
  }
  if (examples.length === 0) {
    throw new InputError(`${path}: no examples`);
  }
  return examples;
}

export function writeScores(path: string, records: readonly ScoreRecord[]): void {
  const lines = records.map((record) => JSON.stringify(record));
  writeFileSync(path, lines.join("\n") + "\n", "utf8");
}
