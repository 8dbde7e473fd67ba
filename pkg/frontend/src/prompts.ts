import type { Example } from "./types.js";

export const MASK = "<mask>";

export class TemplateError extends Error {}

const SLOT = /\{VERBALIZER\}|\{INPUT(?::(HYP|PREM))?\}/g;

/**
 * A prompt with the verbalizer slot expanded into mask positions.
 * `parts` holds the text chunks around the masks, so a prompt with k
 * masks has k + 1 parts.
 */
export interface MaskedPrompt {
  readonly parts: readonly string[];
}

export function maskCount(prompt: MaskedPrompt): number {
  return prompt.parts.length - 1;
}

// the template supplies its own sentence punctuation
function stripTerminator(text: string): string {
  return text.replace(/[.!?]+\s*$/, "").trim();
}

function roleText(example: Example, role: string | undefined): string {
  if (role === "HYP") {
    if (example.hyp === undefined) {
      throw new TemplateError("template wants a hypothesis but the example has none");
    }
    return example.hyp;
  }
  if (role === "PREM") {
    if (example.prem === undefined) {
      throw new TemplateError("template wants a premise but the example has none");
    }
    return example.prem;
  }
  if (example.input === undefined) {
    throw new TemplateError("template wants a plain input but the example has none");
  }
  return example.input;
}

/**
 * Substitute the example's text into the input slots and expand the
 * single {VERBALIZER} slot into `masks` whitespace-separated mask
 * positions.  Every populated prompt has at least one mask.
 */
export function populate(template: string, example: Example, masks: number): MaskedPrompt {
  if (masks < 1) {
    throw new TemplateError(`a prompt needs at least one mask, got ${masks}`);
  }
  const parts: string[] = [""];
  let sawVerbalizer = false;
  let last = 0;
  for (const hit of template.matchAll(SLOT)) {
    parts[parts.length - 1] += template.slice(last, hit.index);
    last = hit.index + hit[0].length;
    if (hit[0] === "{VERBALIZER}") {
      if (sawVerbalizer) {
        throw new TemplateError("template has more than one {VERBALIZER} slot");
      }
      sawVerbalizer = true;
      for (let i = 0; i < masks; i++) {
        parts.push(i < masks - 1 ? " " : "");
      }
    } else {
      parts[parts.length - 1] += stripTerminator(roleText(example, hit[1]));
    }
  }
  if (!sawVerbalizer) {
    throw new TemplateError("template has no {VERBALIZER} slot");
  }
  parts[parts.length - 1] += template.slice(last);
  return { parts };
}

/**
 * Text of the prompt given the current fill state.  `filled[i]` is the
 * token sitting in slot i, or null while the slot still shows the mask.
 */
export function render(prompt: MaskedPrompt, filled: readonly (string | null)[]): string {
  const slots = maskCount(prompt);
  if (filled.length !== slots) {
    throw new TemplateError(`fill state has ${filled.length} entries for ${slots} slots`);
  }
  const pieces: string[] = [prompt.parts[0] as string];
  for (let i = 0; i < slots; i++) {
    pieces.push(filled[i] ?? MASK);
    pieces.push(prompt.parts[i + 1] as string);
  }
  return pieces.join("");
}
