import { readFileSync } from "node:fs";

export interface MaskQuery {
  /** Prompt text with every still-unfilled slot rendered as the mask token. */
  text: string;
  /** Index of the queried slot in the original prompt, left to right. */
  slot: number;
  token: string;
}

export interface MaskedModel {
  /** Probability in (0, 1] that `token` fills `slot` given the current text. */
  probability(query: MaskQuery): number;
}

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

// 32-bit FNV-1a over UTF-16 code units; integer ops only so every
// runtime produces the same value
function fnv1a(key: string): number {
  let hash = FNV_OFFSET;
  for (let i = 0; i < key.length; i++) {
    hash ^= key.charCodeAt(i);
    hash = Math.imul(hash, FNV_PRIME) >>> 0;
  }
  return hash;
}

/**
 * Deterministic stand-in for a real masked LM.  Probabilities are a
 * pure function of (seed, slot, token, current text), so filling one
 * slot changes what the model says about the rest, as iterative
 * decoding would, yet repeated runs are byte-identical.
 */
export class StubModel implements MaskedModel {
  constructor(private readonly seed: number = 0) {}

  probability(query: MaskQuery): number {
    const key = `${this.seed}|${query.slot}|${query.token}|${query.text}`;
    return ((fnv1a(key) % 9973) + 1) / 9975;
  }
}

/** Fixed lookup table keyed by "slot:token"; for hand-built fixtures. */
export class TableModel implements MaskedModel {
  constructor(private readonly probs: Record<string, number>) {}

  probability(query: MaskQuery): number {
    const p = this.probs[`${query.slot}:${query.token}`];
    if (p === undefined) {
      throw new Error(`no probability for slot ${query.slot}, token "${query.token}"`);
    }
    return p;
  }
}

/**
 * Model identity is plain configuration: "stub", "stub:SEED", or
 * "table:PATH" where PATH holds a JSON probability table.
 */
export function loadModel(spec: string): MaskedModel {
  if (spec === "stub") {
    return new StubModel();
  }
  const seeded = /^stub:(\d+)$/.exec(spec);
  if (seeded !== null) {
    return new StubModel(Number(seeded[1]));
  }
  const table = /^table:(.+)$/.exec(spec);
  if (table !== null) {
    return new TableModel(JSON.parse(readFileSync(table[1] as string, "utf8")));
  }
  throw new Error(`unknown model "${spec}"; expected stub, stub:SEED, or table:PATH`);
}
