import { describe, expect, it } from "vitest";

import { aggregate, normalize, type Aggregate } from "../src/scoring.js";

// deterministic PRNG so the brute-force table is frozen
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled<T>(items: readonly T[], rng: () => number): T[] {
  const out = [...items];
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    const tmp = out[i] as T;
    out[i] = out[j] as T;
    out[j] = tmp;
  }
  return out;
}

function argmax(labels: readonly string[], masses: readonly number[]): string {
  return normalize(labels, masses).argmaxLabel;
}

const AGGREGATES: Aggregate[] = ["avg", "max", "sum"];

describe("aggregate and normalize, brute-forced over random tables", () => {
  const rng = mulberry32(0x5eed);
  const tables: { labels: string[]; probs: number[][] }[] = [];
  for (let round = 0; round < 1000; round++) {
    const nClasses = 2 + Math.floor(rng() * 3);
    const labels = Array.from({ length: nClasses }, (_, i) => `class${i}`);
    const equalCounts = round % 2 === 0;
    const width = 1 + Math.floor(rng() * 4);
    const probs = labels.map(() => {
      const count = equalCounts ? width : 1 + Math.floor(rng() * 5);
      return Array.from({ length: count }, () => 0.001 + rng() * 0.998);
    });
    tables.push({ labels, probs });
  }

  it("avg and sum agree on the winner when every class has the same verbalizer count", () => {
    for (const { labels, probs } of tables) {
      const width = (probs[0] as number[]).length;
      if (!probs.every((row) => row.length === width)) {
        continue;
      }
      const byAvg = argmax(labels, probs.map((row) => aggregate(row, "avg")));
      const bySum = argmax(labels, probs.map((row) => aggregate(row, "sum")));
      expect(bySum).toBe(byAvg);
    }
  });

  it("ignores the order verbalizer probabilities arrive in", () => {
    for (const { labels, probs } of tables) {
      for (const agg of AGGREGATES) {
        const masses = probs.map((row) => aggregate(row, agg));
        const permuted = probs.map((row) => aggregate(shuffled(row, rng), agg));
        for (let i = 0; i < masses.length; i++) {
          expect(Math.abs((permuted[i] as number) - (masses[i] as number))).toBeLessThan(1e-12);
        }
        expect(argmax(labels, permuted)).toBe(argmax(labels, masses));
      }
    }
  });

  it("normalizes every class mass vector to a unit total", () => {
    for (const { labels, probs } of tables) {
      for (const agg of AGGREGATES) {
        const { probs: normalized } = normalize(labels, probs.map((row) => aggregate(row, agg)));
        const total = Object.values(normalized).reduce((a, b) => a + b, 0);
        expect(Math.abs(total - 1)).toBeLessThan(1e-6);
      }
    }
  });

  it("keeps the winner under any positive rescaling of the raw probabilities", () => {
    for (const { labels, probs } of tables) {
      const scale = 0.1 + rng() * 9.9;
      for (const agg of AGGREGATES) {
        const masses = probs.map((row) => aggregate(row, agg));
        const scaled = probs.map((row) => aggregate(row.map((p) => p * scale), agg));
        const base = normalize(labels, masses);
        const moved = normalize(labels, scaled);
        expect(moved.argmaxLabel).toBe(base.argmaxLabel);
        for (const label of labels) {
          expect(Math.abs((moved.probs[label] as number) - (base.probs[label] as number))).toBeLessThan(
            1e-9,
          );
        }
      }
    }
  });
});

describe("aggregate", () => {
  it("matches the three reductions on a worked row", () => {
    const row = [0.5, 0.2, 0.2];
    expect(aggregate(row, "avg")).toBeCloseTo(0.3, 12);
    expect(aggregate(row, "max")).toBe(0.5);
    expect(aggregate(row, "sum")).toBeCloseTo(0.9, 12);
  });

  it("rejects an empty row", () => {
    expect(() => aggregate([], "avg")).toThrow(RangeError);
  });
});

describe("normalize", () => {
  it("rejects masses that sum to zero and misaligned inputs", () => {
    expect(() => normalize(["a"], [0])).toThrow(RangeError);
    expect(() => normalize(["a", "b"], [1])).toThrow(RangeError);
  });
});
