export { InputError, loadDataset, loadTask, writeScores } from "./io.js";
export { loadModel, StubModel, TableModel, type MaskedModel, type MaskQuery } from "./model.js";
export { MASK, maskCount, populate, render, TemplateError, type MaskedPrompt } from "./prompts.js";
export {
  aggregate,
  normalize,
  predict,
  scoreDataset,
  scoreVerbalizer,
  TokenizationMismatch,
  type Aggregate,
  type Mode,
  type Prediction,
  type VerbalizerScore,
} from "./scoring.js";
export { tokenize } from "./tokenizer.js";
export {
  classSpecSchema,
  exampleSchema,
  taskSchema,
  type ClassSpec,
  type Example,
  type ScoreRecord,
  type TaskSpec,
} from "./types.js";
