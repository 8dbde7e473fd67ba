/**
 * Word-level tokenizer for verbalizers: lowercase, split on whitespace
 * and hyphens.  A verbalizer's token count decides how many mask slots
 * its prompt gets.
 */
export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[\s-]+/)
    .filter((piece) => piece.length > 0);
}
