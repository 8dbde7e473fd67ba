"""Balanced dataset assembly, batch sampling, and JSONL export.

Balancing gives every verbalizer of a class an equal share of the class
cap.  Shares left unused by short-supplied verbalizers are redistributed
over the remaining ones until the cap is met or supply runs out, keeping
the spread between any two verbalizers with spare supply at most one.
Quota remainders always go to the earliest verbalizers in declaration
order, and within-bucket selection is a seeded uniform draw, so the whole
step is reproducible.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from . import __version__
from .errors import EmptyClass, InvalidTask
from .miner import MinedExample
from .task import TaskSpec

DEFAULT_CAP = 40_000
UNIFORM_CLASS_THEN_UNIFORM_EXAMPLE = "UNIFORM_CLASS_THEN_UNIFORM_EXAMPLE"

# Reference settings for finetuning a full masked-LM classifier on exported
# data.  Recorded in the manifest for downstream trainers; the surrogate
# trainer in this package uses its own desk-scale defaults instead.
REFERENCE_FINETUNE = {
    "model": "roberta-base",
    "parameters": 123_000_000,
    "model_selection": "last",
    "batch_size": 32,
    "batch_sampler": "inverse_class_frequency",
    "optimizer": "adam",
    "learning_rate": 1e-5,
    "schedule": "warmup_linear_decay",
    "warmup_ratio": 0.06,
    "adam_epsilon": 1e-8,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "weight_decay": 0.0,
    "classifier_dropout": 0.0,
    "attention_dropout": 0.1,
    "hidden_dropout": 0.4,
    "max_steps": 5000,
}


@dataclass(frozen=True)
class SamplerSpec:
    strategy: str = UNIFORM_CLASS_THEN_UNIFORM_EXAMPLE
    seed: int = 0
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.strategy != UNIFORM_CLASS_THEN_UNIFORM_EXAMPLE:
            raise ValueError(f"unknown sampling strategy {self.strategy!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "batch_size": self.batch_size,
        }


@dataclass(frozen=True)
class BalancedDataset:
    examples: tuple[MinedExample, ...]
    per_class_counts: dict[str, int]
    per_verbalizer_counts: dict[str, dict[str, int]]
    cap: int
    seed: int

    @classmethod
    def from_examples(cls, examples: Sequence[MinedExample], cap: int = 0, seed: int = 0) -> "BalancedDataset":
        """Wrap already-selected examples, recomputing the count tables."""
        per_class: dict[str, int] = {}
        per_verbalizer: dict[str, dict[str, int]] = {}
        for example in examples:
            per_class[example.label] = per_class.get(example.label, 0) + 1
            bucket = per_verbalizer.setdefault(example.label, {})
            bucket[example.verbalizer] = bucket.get(example.verbalizer, 0) + 1
        return cls(
            examples=tuple(examples),
            per_class_counts=per_class,
            per_verbalizer_counts=per_verbalizer,
            cap=cap,
            seed=seed,
        )


def _waterfill(cap: int, supplies: Sequence[int]) -> list[int]:
    """Split ``cap`` over buckets as evenly as their supplies allow.

    Remainders go to the earliest buckets.  Buckets whose supply falls
    below their tentative share contribute everything they have, and the
    leftover is re-split over the rest.
    """
    counts = [0] * len(supplies)
    active = list(range(len(supplies)))
    remaining = cap
    while active and remaining > 0:
        level, extra = divmod(remaining, len(active))
        tentative = {
            index: level + (1 if rank < extra else 0)
            for rank, index in enumerate(active)
        }
        limited = [index for index in active if supplies[index] < tentative[index]]
        if not limited:
            for index in active:
                counts[index] = tentative[index]
            return counts
        for index in limited:
            counts[index] = supplies[index]
            remaining -= supplies[index]
        active = [index for index in active if index not in limited]
    return counts


def balance(
    examples: Sequence[MinedExample],
    cap: int = DEFAULT_CAP,
    seed: int = 0,
    task: TaskSpec | None = None,
) -> BalancedDataset:
    """Cap each class at ``cap`` examples, spread evenly over verbalizers.

    Args:
        examples: mined examples from one task.
        cap: per-class maximum.
        seed: drives the within-bucket uniform selection.
        task: when given, fixes verbalizer declaration order (which decides
            who receives quota remainders) and makes a class with zero
            mined examples a hard error.

    Raises:
        EmptyClass: no examples at all, or a declared class with none.
        InvalidTask: an example carries a label or verbalizer the task
            does not declare.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if not examples:
        raise EmptyClass("no mined examples to balance")

    buckets: dict[str, dict[str, list[MinedExample]]] = {}
    for example in examples:
        buckets.setdefault(example.label, {}).setdefault(example.verbalizer, []).append(example)

    if task is not None:
        for label in buckets:
            if label not in task.labels:
                raise InvalidTask(f"example label {label!r} is not declared by task {task.name!r}")
        for cls in task.classes:
            if cls.label not in buckets:
                raise EmptyClass(f"class {cls.label!r} has zero mined examples")
            declared = set(cls.verbalizers)
            for verbalizer in buckets[cls.label]:
                if verbalizer not in declared:
                    raise InvalidTask(
                        f"verbalizer {verbalizer!r} is not declared for class {cls.label!r}"
                    )
        label_order = list(task.labels)
        verbalizer_order = {cls.label: list(cls.verbalizers) for cls in task.classes}
    else:
        label_order = list(buckets)
        verbalizer_order = {label: list(buckets[label]) for label in buckets}

    selected: list[MinedExample] = []
    per_class: dict[str, int] = {}
    per_verbalizer: dict[str, dict[str, int]] = {}
    for label in label_order:
        order = verbalizer_order[label]
        supplies = [len(buckets[label].get(v, [])) for v in order]
        quotas = _waterfill(cap, supplies)
        per_verbalizer[label] = {}
        for verbalizer, quota in zip(order, quotas):
            # ref-sorted so the draw depends on the set, not input order
            bucket = sorted(buckets[label].get(verbalizer, []), key=lambda e: e.ref())
            if quota >= len(bucket):
                chosen = bucket
            else:
                rng = random.Random(f"{seed}:{label}:{verbalizer}")
                chosen = rng.sample(bucket, quota)
            selected.extend(chosen)
            if chosen:
                per_verbalizer[label][verbalizer] = len(chosen)
        per_class[label] = sum(per_verbalizer[label].values())

    selected.sort(key=lambda e: (e.ref(), e.label, e.verbalizer))
    return BalancedDataset(
        examples=tuple(selected),
        per_class_counts=per_class,
        per_verbalizer_counts=per_verbalizer,
        cap=cap,
        seed=seed,
    )


def draw_batches(
    ds: BalancedDataset, spec: SamplerSpec, n_batches: int
) -> Iterator[list[MinedExample]]:
    """Yield batches, sampling a class uniformly and then an example in it.

    Drawing is with replacement and fully determined by ``spec.seed``.
    """
    labels = sorted(ds.per_class_counts)
    if not labels:
        raise EmptyClass("dataset has no examples to sample from")
    pools: dict[str, list[MinedExample]] = {label: [] for label in labels}
    for example in ds.examples:
        pools[example.label].append(example)
    rng = random.Random(spec.seed)
    for _ in range(n_batches):
        batch = []
        for _ in range(spec.batch_size):
            label = labels[rng.randrange(len(labels))]
            pool = pools[label]
            batch.append(pool[rng.randrange(len(pool))])
        yield batch


@dataclass(frozen=True)
class DatasetManifest:
    version: str
    task: str | None
    task_sha256: str | None
    cap: int
    seed: int
    n_examples: int
    per_class_counts: dict[str, int]
    per_verbalizer_counts: dict[str, dict[str, int]]
    dataset_sha256: str
    sampler: dict = field(default_factory=SamplerSpec().to_dict)
    reference_finetune: dict = field(default_factory=lambda: dict(REFERENCE_FINETUNE))
    filter: dict | None = None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "task": self.task,
            "task_sha256": self.task_sha256,
            "cap": self.cap,
            "seed": self.seed,
            "n_examples": self.n_examples,
            "per_class_counts": self.per_class_counts,
            "per_verbalizer_counts": self.per_verbalizer_counts,
            "dataset_sha256": self.dataset_sha256,
            "sampler": self.sampler,
            "reference_finetune": self.reference_finetune,
            "filter": self.filter,
        }


def dataset_line(example: MinedExample) -> str:
    """Serialize one example in the export schema (no matched span)."""
    out: dict = {"label": example.label}
    if example.input is not None:
        out["input"] = example.input
    else:
        out["hyp"] = example.hyp
        out["prem"] = example.prem
    out["verbalizer"] = example.verbalizer
    out["shard_id"] = example.shard_id
    out["doc_index"] = example.doc_index
    out["byte_offset"] = example.byte_offset
    return json.dumps(out, ensure_ascii=False)


def export(
    ds: BalancedDataset,
    path: str | Path,
    *,
    task_name: str | None = None,
    task_sha256: str | None = None,
    sampler: SamplerSpec | None = None,
    filter_info: dict | None = None,
) -> DatasetManifest:
    """Write the dataset JSONL and return its manifest.

    Neither the file nor the manifest contains anything run-dependent, so
    re-exporting the same dataset is byte-identical.
    """
    payload = "".join(dataset_line(example) + "\n" for example in ds.examples)
    data = payload.encode("utf-8")
    Path(path).write_bytes(data)
    return DatasetManifest(
        version=__version__,
        task=task_name,
        task_sha256=task_sha256,
        cap=ds.cap,
        seed=ds.seed,
        n_examples=len(ds.examples),
        per_class_counts=dict(ds.per_class_counts),
        per_verbalizer_counts={k: dict(v) for k, v in ds.per_verbalizer_counts.items()},
        dataset_sha256=hashlib.sha256(data).hexdigest(),
        sampler=(sampler or SamplerSpec()).to_dict(),
        filter=filter_info,
    )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_dataset(path: str | Path) -> list[MinedExample]:
    """Read an exported dataset; matched spans are not part of the schema."""
    with open(path, encoding="utf-8") as handle:
        return [MinedExample.from_dict(json.loads(line)) for line in handle if line.strip()]
