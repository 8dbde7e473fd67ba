import { z } from "zod";

export const classSpecSchema = z.object({
  label: z.string().min(1),
  verbalizers: z.array(z.string().min(1)).min(1),
});

/**
 * Task file shared with the mining side.  Only the fields the scorer
 * reads are validated; extra keys (mining patterns and so on) pass
 * through untouched.
 */
export const taskSchema = z.looseObject({
  task: z.string().min(1),
  arity: z.enum(["single", "pair"]),
  prompt_patterns: z.array(z.string().min(1)).min(1),
  classes: z.array(classSpecSchema).min(2),
});

export type ClassSpec = z.infer<typeof classSpecSchema>;
export type TaskSpec = z.infer<typeof taskSchema>;

/** One dataset line as exported by the miner. */
export const exampleSchema = z
  .looseObject({
    label: z.string().min(1),
    verbalizer: z.string().min(1),
    input: z.string().min(1).optional(),
    hyp: z.string().min(1).optional(),
    prem: z.string().min(1).optional(),
    shard_id: z.number().int().nonnegative(),
    doc_index: z.number().int().nonnegative(),
    byte_offset: z.number().int().nonnegative(),
  })
  .refine(
    (ex) =>
      ex.input !== undefined
        ? ex.hyp === undefined && ex.prem === undefined
        : ex.hyp !== undefined && ex.prem !== undefined,
    { message: "example must carry either input or hyp and prem" },
  );

export type Example = z.infer<typeof exampleSchema>;

/**
 * One score line, keyed by the example's (shard_id, doc_index,
 * byte_offset) provenance triple.  per_class_probs sums to 1 and the
 * predicted label carries the maximum, which is also the confidence.
 */
export interface ScoreRecord {
  example_ref: [number, number, number];
  predicted_label: string;
  confidence: number;
  per_class_probs: Record<string, number>;
}
