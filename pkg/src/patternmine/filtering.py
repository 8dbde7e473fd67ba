"""Confidence-ranked mismatch filtering and the label-agreement diagnostic.

A scorer assigns every example a predicted label and a confidence.  The
filter removes the most confidently contradicted fraction of mismatches
(examples whose predicted label differs from the mined one) and never
touches an example the scorer agrees with.  Scores can come from any
source that writes the score-file contract; a cross-fitted naive Bayes
scorer is built in so the pipeline runs standalone.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .builder import BalancedDataset
from .errors import (
    DegenerateVocabulary,
    DuplicateScore,
    EmptyClass,
    EmptyInput,
    MissingScore,
)
from .miner import MinedExample

ExampleRef = tuple[int, int, int]

PROB_TOLERANCE = 1e-6
DEFAULT_FILTER_FRACTION = 0.10
NB_FOLDS = 5
NB_ALPHA = 1.0

_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class ScoreRecord:
    example_ref: ExampleRef
    predicted_label: str
    confidence: float
    per_class_probs: dict[str, float] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.per_class_probs is not None:
            total = sum(self.per_class_probs.values())
            if abs(total - 1.0) > PROB_TOLERANCE:
                raise ValueError(f"per_class_probs sum to {total}, not 1")
            top = max(self.per_class_probs.values())
            predicted = self.per_class_probs.get(self.predicted_label)
            if predicted is None or abs(predicted - top) > PROB_TOLERANCE:
                raise ValueError(
                    f"predicted_label {self.predicted_label!r} does not carry the max probability"
                )
            if abs(predicted - self.confidence) > PROB_TOLERANCE:
                raise ValueError("confidence disagrees with per_class_probs")

    def to_dict(self) -> dict:
        out: dict = {
            "example_ref": list(self.example_ref),
            "predicted_label": self.predicted_label,
            "confidence": self.confidence,
        }
        if self.per_class_probs is not None:
            out["per_class_probs"] = self.per_class_probs
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ScoreRecord":
        ref = obj["example_ref"]
        return cls(
            example_ref=(int(ref[0]), int(ref[1]), int(ref[2])),
            predicted_label=obj["predicted_label"],
            confidence=float(obj["confidence"]),
            per_class_probs=obj.get("per_class_probs"),
        )


@dataclass(frozen=True)
class FilterReport:
    n_examples: int
    n_mismatches: int
    n_removed: int
    removal_fraction: float
    agreement_pct: float
    confidence_threshold_used: float | None

    def to_dict(self) -> dict:
        return {
            "n_examples": self.n_examples,
            "n_mismatches": self.n_mismatches,
            "n_removed": self.n_removed,
            "removal_fraction": self.removal_fraction,
            "agreement_pct": self.agreement_pct,
            "confidence_threshold_used": self.confidence_threshold_used,
        }


def write_scores(path: str | Path, scores: Sequence[ScoreRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for score in scores:
            handle.write(json.dumps(score.to_dict(), ensure_ascii=False) + "\n")


def read_scores(path: str | Path) -> list[ScoreRecord]:
    with open(path, encoding="utf-8") as handle:
        return [ScoreRecord.from_dict(json.loads(line)) for line in handle if line.strip()]


def _index_scores(scores: Sequence[ScoreRecord]) -> dict[ExampleRef, ScoreRecord]:
    indexed: dict[ExampleRef, ScoreRecord] = {}
    for score in scores:
        if score.example_ref in indexed:
            raise DuplicateScore(f"two score records for example_ref {score.example_ref}")
        indexed[score.example_ref] = score
    return indexed


def _paired(
    examples: Sequence[MinedExample], scores: Sequence[ScoreRecord]
) -> list[tuple[MinedExample, ScoreRecord]]:
    indexed = _index_scores(scores)
    paired = []
    for example in examples:
        score = indexed.get(example.ref())
        if score is None:
            raise MissingScore(f"no score record for example_ref {example.ref()}")
        paired.append((example, score))
    return paired


def _cut_count(fraction: float, n: int) -> int:
    # floor of the exact product; the epsilon absorbs float artifacts of
    # decimal fractions like 0.29 * 100 = 28.999999999999996
    return math.floor(fraction * n + 1e-9)


def filter_mismatches(
    examples: Sequence[MinedExample],
    scores: Sequence[ScoreRecord],
    fraction: float = DEFAULT_FILTER_FRACTION,
    *,
    per_class: bool = False,
) -> tuple[list[MinedExample], list[MinedExample], FilterReport]:
    """Remove the most confident fraction of label mismatches.

    Args:
        examples: mined examples, each with exactly one score.
        scores: score records keyed by example_ref.
        fraction: share of mismatches to remove; the count is
            floor(fraction * mismatches).
        per_class: compute the removal count within each mined label
            instead of globally.

    Returns:
        (kept, removed, report); kept preserves input order, removed is in
        descending confidence order with ties broken by example_ref.
    """
    if not examples:
        raise EmptyInput("cannot filter an empty example list")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside [0, 1]")

    paired = _paired(examples, scores)
    mismatches = [
        (index, example, score)
        for index, (example, score) in enumerate(paired)
        if score.predicted_label != example.label
    ]

    def ranked(items: list[tuple[int, MinedExample, ScoreRecord]]):
        return sorted(items, key=lambda t: (-t[2].confidence, t[1].ref(), t[1].label))

    to_remove: list[tuple[int, MinedExample, ScoreRecord]] = []
    if per_class:
        by_label: dict[str, list] = {}
        for item in mismatches:
            by_label.setdefault(item[1].label, []).append(item)
        for label in sorted(by_label):
            items = ranked(by_label[label])
            to_remove.extend(items[: _cut_count(fraction, len(items))])
        to_remove = ranked(to_remove)
    else:
        to_remove = ranked(mismatches)[: _cut_count(fraction, len(mismatches))]

    removed_indices = {index for index, _, _ in to_remove}
    kept = [example for index, (example, _) in enumerate(paired) if index not in removed_indices]
    removed = [example for _, example, _ in to_remove]

    n = len(examples)
    n_mismatches = len(mismatches)
    report = FilterReport(
        n_examples=n,
        n_mismatches=n_mismatches,
        n_removed=len(removed),
        removal_fraction=fraction,
        agreement_pct=100.0 * (n - n_mismatches) / n,
        confidence_threshold_used=(
            min(score.confidence for _, _, score in to_remove) if to_remove else None
        ),
    )
    return kept, removed, report


def label_agreement(examples: Sequence[MinedExample], scores: Sequence[ScoreRecord]) -> float:
    """Percentage of examples whose mined label matches the predicted one."""
    if not examples:
        raise EmptyInput("cannot compute agreement over zero examples")
    paired = _paired(examples, scores)
    matches = sum(1 for example, score in paired if score.predicted_label == example.label)
    return 100.0 * matches / len(examples)


def oracle_score(
    examples: Sequence[MinedExample],
    truth: Mapping[ExampleRef, str] | Callable[[MinedExample], str],
) -> list[ScoreRecord]:
    """Score records that predict the ground-truth label with confidence 1.

    With ``fraction=1.0`` this filters out exactly the mislabeled examples
    on synthetic data where the truth is known.
    """
    lookup = truth if callable(truth) else lambda example: truth[example.ref()]
    records: dict[ExampleRef, ScoreRecord] = {}
    for example in examples:
        ref = example.ref()
        if ref not in records:
            records[ref] = ScoreRecord(
                example_ref=ref, predicted_label=lookup(example), confidence=1.0
            )
    return list(records.values())


def _tokens(example: MinedExample) -> list[str]:
    return [token for text in example.texts() for token in _WORD.findall(text.lower())]


def builtin_score(ds: BalancedDataset, folds: int = NB_FOLDS) -> list[ScoreRecord]:
    """Cross-fitted multinomial naive Bayes over lowercased word unigrams.

    Example i goes to fold ``i % folds`` and is scored by a model fitted
    on the other folds, with Laplace smoothing alpha=1.  Deterministic for
    a fixed dataset.
    """
    examples = ds.examples
    if not examples:
        raise EmptyInput("cannot score an empty dataset")
    labels = sorted({example.label for example in examples})
    if len(labels) < 2:
        raise EmptyClass("builtin scorer needs at least two classes")

    token_lists = [_tokens(example) for example in examples]
    if all(not tokens for tokens in token_lists):
        raise DegenerateVocabulary("every document is empty after tokenization")

    records: list[tuple[int, ScoreRecord]] = []
    for fold in range(folds):
        train = [i for i in range(len(examples)) if i % folds != fold]
        if not train:
            continue
        class_docs: dict[str, int] = {label: 0 for label in labels}
        word_counts: dict[str, dict[str, int]] = {label: {} for label in labels}
        class_tokens: dict[str, int] = {label: 0 for label in labels}
        vocabulary: set[str] = set()
        for i in train:
            label = examples[i].label
            class_docs[label] += 1
            counts = word_counts[label]
            for token in token_lists[i]:
                counts[token] = counts.get(token, 0) + 1
                vocabulary.add(token)
            class_tokens[label] += len(token_lists[i])
        v_size = len(vocabulary)
        n_train = len(train)

        for i in range(fold, len(examples), folds):
            log_posteriors: dict[str, float] = {}
            for label in labels:
                if class_docs[label] == 0:
                    log_posteriors[label] = float("-inf")
                    continue
                logp = math.log(class_docs[label] / n_train)
                denominator = class_tokens[label] + NB_ALPHA * v_size
                counts = word_counts[label]
                for token in token_lists[i]:
                    if token not in vocabulary:
                        continue
                    logp += math.log((counts.get(token, 0) + NB_ALPHA) / denominator)
                log_posteriors[label] = logp
            top = max(log_posteriors.values())
            weights = {
                label: math.exp(value - top) if value > float("-inf") else 0.0
                for label, value in log_posteriors.items()
            }
            total = sum(weights.values())
            probs = {label: weight / total for label, weight in weights.items()}
            predicted = max(labels, key=lambda label: (probs[label], label))
            records.append(
                (
                    i,
                    ScoreRecord(
                        example_ref=examples[i].ref(),
                        predicted_label=predicted,
                        confidence=probs[predicted],
                        per_class_probs=probs,
                    ),
                )
            )

    # The score file is keyed by example_ref, so when the same span was
    # mined under two labels only the earliest example's record survives.
    records.sort(key=lambda pair: pair[0])
    unique: dict[ExampleRef, ScoreRecord] = {}
    for _, record in records:
        unique.setdefault(record.example_ref, record)
    return list(unique.values())
