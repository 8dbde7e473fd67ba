"""Small builders shared across test modules."""

from __future__ import annotations

import json
import random
from pathlib import Path

from patternmine import task as task_mod
from patternmine.miner import CorpusShard, MinedExample, ShardFormat

SENTIMENT_TASK = {
    "task": "sentiment",
    "arity": "single",
    "patterns": ["(is|was) {VERBALIZER}*. {INPUT}"],
    "classes": [
        {"label": "positive", "verbalizers": ["good", "great", "awesome", "incredible"]},
        {"label": "negative", "verbalizers": ["bad", "awful", "terrible", "horrible"]},
    ],
}

NLI_TASK = {
    "task": "nli",
    "arity": "pair",
    "patterns": ["{INPUT:HYP} {VERBALIZER}, {INPUT:PREM}"],
    "classes": [
        {"label": "entailment", "verbalizers": ["Yes", "Therefore"]},
        {"label": "contradiction", "verbalizers": ["No", "However"]},
    ],
}


def sentiment_task() -> task_mod.TaskSpec:
    return task_mod.task_from_dict(SENTIMENT_TASK)


def nli_task() -> task_mod.TaskSpec:
    return task_mod.task_from_dict(NLI_TASK)


def write_plain_shard(path: Path, docs: list[str], shard_id: int) -> CorpusShard:
    path.write_text("".join(doc + "\n" for doc in docs), encoding="utf-8")
    return CorpusShard(shard_id=shard_id, path=str(path), format=ShardFormat.PLAIN_TEXT)


def write_jsonl_shard(path: Path, lines: list[str], shard_id: int) -> CorpusShard:
    """Lines are written verbatim, so malformed records can be planted."""
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return CorpusShard(shard_id=shard_id, path=str(path), format=ShardFormat.JSONL_TEXT_FIELD)


def mined(label: str, verbalizer: str = "v", shard: int = 0, doc: int = 0,
          byte: int = 0, text: str = "some mined sentence.") -> MinedExample:
    return MinedExample(label=label, verbalizer=verbalizer, shard_id=shard,
                        doc_index=doc, byte_offset=byte, input=text)


def mined_supply(label: str, verbalizer: str, n: int, shard: int = 0) -> list[MinedExample]:
    """n distinct examples for one (label, verbalizer) bucket."""
    return [
        MinedExample(label=label, verbalizer=verbalizer, shard_id=shard, doc_index=i,
                     byte_offset=0, input=f"{label} {verbalizer} example {i}.")
        for i in range(n)
    ]


POS_LEAN = ["crisp", "vivid", "smooth", "sturdy", "bright"]
NEG_LEAN = ["grainy", "laggy", "flimsy", "dim", "noisy"]
SHARED = ["device", "camera", "battery", "screen", "lens", "photo", "zoom", "case"]


def topic_tokens(rng: random.Random, positive: bool, n: int = 10) -> list[str]:
    """Class-conditional bag of words with deliberate overlap."""
    lean, other = (POS_LEAN, NEG_LEAN) if positive else (NEG_LEAN, POS_LEAN)
    tokens = []
    for _ in range(n):
        roll = rng.random()
        if roll < 0.45:
            tokens.append(rng.choice(lean))
        elif roll < 0.50:
            tokens.append(rng.choice(other))
        else:
            tokens.append(rng.choice(SHARED))
    return tokens


def review_corpus_docs(rng: random.Random, n_docs: int) -> tuple[list[str], list[str]]:
    """(docs, true_labels): each doc plants one minable review sentence."""
    docs, labels = [], []
    for _ in range(n_docs):
        positive = rng.random() < 0.5
        words = " ".join(topic_tokens(rng, positive))
        verb = "is good" if positive else "was bad"
        docs.append(f"Another item arrived today. It {verb}. The {words} held up.")
        labels.append("positive" if positive else "negative")
    return docs, labels


def eval_examples(rng: random.Random, n: int):
    from patternmine.trainer import LabeledExample

    out = []
    for _ in range(n):
        positive = rng.random() < 0.5
        words = " ".join(topic_tokens(rng, positive))
        out.append(LabeledExample(label="positive" if positive else "negative",
                                  text=f"The {words} held up."))
    return out


def write_eval_set(path: Path, examples) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for ex in examples:
            handle.write(json.dumps({"text": ex.text, "label": ex.label}) + "\n")
