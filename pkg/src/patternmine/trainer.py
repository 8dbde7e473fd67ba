"""Desk-scale linear trainer for sanity-checking mined datasets.

A multinomial logistic regression over unigram counts, trained with
mini-batch gradient descent on batches from the dataset sampler.  It
stands in for transformer finetuning: fast enough to run in tests while
still being sensitive to label noise in the mined data.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .builder import BalancedDataset, SamplerSpec, draw_batches
from .errors import (
    DegenerateVocabulary,
    DivergenceDetected,
    EmptyInput,
    UnknownLabel,
)
from .miner import MinedExample

L2_PENALTY = 1e-4
DEFAULT_STEPS = 5000
DEFAULT_LR = 0.1
MIN_TOKEN_FREQ = 2

_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class LabeledExample:
    """One eval-set row: a text (or hyp/prem pair) with a gold label."""

    label: str
    text: str | None = None
    hyp: str | None = None
    prem: str | None = None


def _unigrams(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def _feature_tokens(example: MinedExample | LabeledExample) -> list[str]:
    if isinstance(example, MinedExample):
        single, hyp, prem = example.input, example.hyp, example.prem
    else:
        single, hyp, prem = example.text, example.hyp, example.prem
    if single is not None:
        return _unigrams(single)
    # pair inputs keep the two sides in separate feature namespaces
    return [f"h:{t}" for t in _unigrams(hyp or "")] + [
        f"p:{t}" for t in _unigrams(prem or "")
    ]


def build_vocab(examples: Sequence[MinedExample | LabeledExample]) -> dict[str, int]:
    """Token -> column index for tokens seen at least MIN_TOKEN_FREQ times."""
    frequency: dict[str, int] = {}
    for example in examples:
        for token in _feature_tokens(example):
            frequency[token] = frequency.get(token, 0) + 1
    kept = sorted(token for token, count in frequency.items() if count >= MIN_TOKEN_FREQ)
    if not kept:
        raise DegenerateVocabulary(
            "no token appears at least twice; cannot build features"
        )
    return {token: index for index, token in enumerate(kept)}


def featurize(
    examples: Sequence[MinedExample | LabeledExample], vocab: dict[str, int]
) -> sparse.csr_matrix:
    """Unigram count matrix, one row per example; unknown tokens are skipped."""
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for example in examples:
        row: dict[int, int] = {}
        for token in _feature_tokens(example):
            column = vocab.get(token)
            if column is not None:
                row[column] = row.get(column, 0) + 1
        for column in sorted(row):
            indices.append(column)
            data.append(float(row[column]))
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (data, indices, indptr), shape=(len(examples), len(vocab)), dtype=np.float64
    )


@dataclass
class LinearModel:
    vocab: dict[str, int]
    labels: tuple[str, ...]
    weights: np.ndarray
    bias: np.ndarray
    seed: int
    pair_input: bool = False

    def logits(self, x: sparse.csr_matrix) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def predict_probs(self, x: sparse.csr_matrix) -> np.ndarray:
        return softmax(self.logits(x))

    def save(self, path: str | Path) -> None:
        obj = {
            "vocab": self.vocab,
            "labels": list(self.labels),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "seed": self.seed,
            "pair_input": self.pair_input,
        }
        Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            vocab=obj["vocab"],
            labels=tuple(obj["labels"]),
            weights=np.array(obj["weights"], dtype=np.float64),
            bias=np.array(obj["bias"], dtype=np.float64),
            seed=obj["seed"],
            pair_input=obj.get("pair_input", False),
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_grads(
    weights: np.ndarray,
    bias: np.ndarray,
    x: sparse.csr_matrix,
    y: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus 0.5 * L2_PENALTY * ||W||^2, with gradients.

    The bias is not regularized.
    """
    n = x.shape[0]
    logits = x @ weights.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_z[:, None]
    nll = -log_probs[np.arange(n), y].mean()
    loss = nll + 0.5 * L2_PENALTY * float((weights**2).sum())

    probs = np.exp(log_probs)
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = (x.T @ delta).T + L2_PENALTY * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def train(
    ds: BalancedDataset,
    spec: SamplerSpec,
    steps: int = DEFAULT_STEPS,
    lr: float = DEFAULT_LR,
    on_step: Callable[[int, float], None] | None = None,
) -> LinearModel:
    """Train a linear classifier on the dataset with mini-batch descent.

    Weights start at zero, each step draws one batch from the uniform
    class-then-example sampler, and everything is determined by the
    sampler seed, so two runs produce bit-identical weights.

    Raises:
        DivergenceDetected: the loss became NaN or infinite.
    """
    if not ds.examples:
        raise EmptyInput("cannot train on an empty dataset")
    labels = tuple(sorted(ds.per_class_counts))
    label_index = {label: i for i, label in enumerate(labels)}
    vocab = build_vocab(ds.examples)
    features = featurize(ds.examples, vocab)
    row_of = {}
    for i, example in enumerate(ds.examples):
        row_of.setdefault(example, i)

    weights = np.zeros((len(labels), len(vocab)), dtype=np.float64)
    bias = np.zeros(len(labels), dtype=np.float64)

    for step, batch in enumerate(draw_batches(ds, spec, steps)):
        rows = [row_of[example] for example in batch]
        x = features[rows]
        y = np.array([label_index[example.label] for example in batch], dtype=np.intp)
        loss, grad_w, grad_b = loss_and_grads(weights, bias, x, y)
        if not math.isfinite(loss):
            raise DivergenceDetected(f"loss became {loss} at step {step}")
        weights -= lr * grad_w
        bias -= lr * grad_b
        if on_step is not None:
            on_step(step, loss)

    pair_input = bool(ds.examples and ds.examples[0].input is None)
    return LinearModel(
        vocab=vocab,
        labels=labels,
        weights=weights,
        bias=bias,
        seed=spec.seed,
        pair_input=pair_input,
    )


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    n_correct: int
    n_total: int
    per_class_accuracy: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_correct": self.n_correct,
            "n_total": self.n_total,
            "per_class_accuracy": self.per_class_accuracy,
        }


def evaluate(model: LinearModel, labeled: Sequence[LabeledExample]) -> EvalResult:
    """Accuracy of the model on a labeled eval set.

    Raises:
        UnknownLabel: the eval set names a class the model does not have.
        EmptyInput: the eval set is empty.
    """
    if not labeled:
        raise EmptyInput("cannot evaluate on an empty set")
    known = set(model.labels)
    for example in labeled:
        if example.label not in known:
            raise UnknownLabel(f"eval label {example.label!r} not in model classes")

    features = featurize(labeled, model.vocab)
    predictions = model.logits(features).argmax(axis=1)
    correct_total: dict[str, int] = {label: 0 for label in model.labels}
    seen_total: dict[str, int] = {label: 0 for label in model.labels}
    n_correct = 0
    for example, prediction in zip(labeled, predictions):
        seen_total[example.label] += 1
        if model.labels[prediction] == example.label:
            correct_total[example.label] += 1
            n_correct += 1
    per_class = {
        label: correct_total[label] / seen_total[label]
        for label in model.labels
        if seen_total[label]
    }
    return EvalResult(
        accuracy=n_correct / len(labeled),
        n_correct=n_correct,
        n_total=len(labeled),
        per_class_accuracy=per_class,
    )


def load_eval_set(path: str | Path) -> list[LabeledExample]:
    """Read a labeled eval set: JSONL of {text, label} or {hyp, prem, label}."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(
                LabeledExample(
                    label=obj["label"],
                    text=obj.get("text"),
                    hyp=obj.get("hyp"),
                    prem=obj.get("prem"),
                )
            )
    return out
