import type { MaskedModel } from "./model.js";
import { maskCount, populate, render, type MaskedPrompt } from "./prompts.js";
import { tokenize } from "./tokenizer.js";
import type { Example, ScoreRecord, TaskSpec } from "./types.js";

export class TokenizationMismatch extends Error {}

export type Mode = "single" | "multi";
export type Aggregate = "avg" | "max" | "sum";

export interface VerbalizerScore {
  label: string;
  verbalizer: string;
  /** Sum of the per-step token log-probabilities; never positive. */
  logProb: number;
  nTokens: number;
  /** Slots in the order the greedy pass filled them. */
  fillOrder: number[];
}

export interface Prediction {
  predictedLabel: string;
  confidence: number;
  perClassProbs: Record<string, number>;
  scores: VerbalizerScore[];
}

function checkedProbability(model: MaskedModel, text: string, slot: number, token: string): number {
  const p = model.probability({ text, slot, token });
  if (!Number.isFinite(p) || p <= 0 || p > 1) {
    throw new RangeError(`model returned probability ${p}, outside (0, 1]`);
  }
  return p;
}

/**
 * Greedy left-behind fill: at each step, query the target token's
 * probability at every still-open slot against the current text, commit
 * the slot whose target is most probable, and add its log-probability.
 * Ties go to the leftmost slot.
 */
export function scoreVerbalizer(
  model: MaskedModel,
  prompt: MaskedPrompt,
  tokens: readonly string[],
): { logProb: number; fillOrder: number[] } {
  const slots = maskCount(prompt);
  if (tokens.length !== slots) {
    throw new TokenizationMismatch(
      `verbalizer tokenizes to ${tokens.length} pieces but the prompt has ${slots} mask slots`,
    );
  }
  const filled: (string | null)[] = new Array(slots).fill(null);
  const fillOrder: number[] = [];
  let logProb = 0;
  for (let step = 0; step < slots; step++) {
    const text = render(prompt, filled);
    let bestSlot = -1;
    let bestProb = 0;
    for (let slot = 0; slot < slots; slot++) {
      if (filled[slot] !== null) {
        continue;
      }
      const p = checkedProbability(model, text, slot, tokens[slot] as string);
      if (p > bestProb) {
        bestProb = p;
        bestSlot = slot;
      }
    }
    filled[bestSlot] = tokens[bestSlot] as string;
    fillOrder.push(bestSlot);
    logProb += Math.log(bestProb);
  }
  return { logProb, fillOrder };
}

/** Collapse one class's verbalizer probabilities into a single mass. */
export function aggregate(probs: readonly number[], agg: Aggregate): number {
  if (probs.length === 0) {
    throw new RangeError("no probabilities to aggregate");
  }
  if (agg === "max") {
    return probs.reduce((a, b) => Math.max(a, b));
  }
  const total = probs.reduce((a, b) => a + b, 0);
  return agg === "sum" ? total : total / probs.length;
}

/**
 * Renormalize the per-class masses over the verbalizer set only; the
 * rest of the vocabulary never enters.  First label wins a tie.
 */
export function normalize(
  labels: readonly string[],
  masses: readonly number[],
): { probs: Record<string, number>; argmaxLabel: string } {
  if (labels.length !== masses.length || labels.length === 0) {
    throw new RangeError("labels and masses must align and be non-empty");
  }
  const total = masses.reduce((a, b) => a + b, 0);
  if (!(total > 0)) {
    throw new RangeError("class masses must sum to a positive number");
  }
  const probs: Record<string, number> = {};
  let argmaxLabel = labels[0] as string;
  let best = -Infinity;
  for (let i = 0; i < labels.length; i++) {
    const p = (masses[i] as number) / total;
    probs[labels[i] as string] = p;
    if (p > best) {
      best = p;
      argmaxLabel = labels[i] as string;
    }
  }
  return { probs, argmaxLabel };
}

/**
 * Score one example against every class.  SINGLE mode scores only each
 * class's first declared verbalizer; MULTI scores all of them and
 * aggregates with `agg`.  Multi-token verbalizers contribute the sum of
 * their token log-probabilities, with no length normalization.
 */
export function predict(
  model: MaskedModel,
  task: TaskSpec,
  example: Example,
  mode: Mode,
  agg: Aggregate = "avg",
): Prediction {
  const template = task.prompt_patterns[0] as string;
  const scores: VerbalizerScore[] = [];
  const labels: string[] = [];
  const masses: number[] = [];
  for (const cls of task.classes) {
    const verbalizers = mode === "single" ? cls.verbalizers.slice(0, 1) : cls.verbalizers;
    const probs: number[] = [];
    for (const verbalizer of verbalizers) {
      const tokens = tokenize(verbalizer);
      if (tokens.length === 0) {
        throw new TokenizationMismatch(`verbalizer "${verbalizer}" tokenizes to nothing`);
      }
      const prompt = populate(template, example, tokens.length);
      const { logProb, fillOrder } = scoreVerbalizer(model, prompt, tokens);
      scores.push({ label: cls.label, verbalizer, logProb, nTokens: tokens.length, fillOrder });
      probs.push(Math.exp(logProb));
    }
    labels.push(cls.label);
    masses.push(aggregate(probs, agg));
  }
  const { probs, argmaxLabel } = normalize(labels, masses);
  return {
    predictedLabel: argmaxLabel,
    confidence: probs[argmaxLabel] as number,
    perClassProbs: probs,
    scores,
  };
}

/** One record per example, in input order, with the provenance ref verbatim. */
export function scoreDataset(
  model: MaskedModel,
  task: TaskSpec,
  examples: readonly Example[],
  mode: Mode,
  agg: Aggregate = "avg",
): ScoreRecord[] {
  return examples.map((example) => {
    const prediction = predict(model, task, example, mode, agg);
    return {
      example_ref: [example.shard_id, example.doc_index, example.byte_offset],
      predicted_label: prediction.predictedLabel,
      confidence: prediction.confidence,
      per_class_probs: prediction.perClassProbs,
    };
  });
}
