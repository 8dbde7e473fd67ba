"""Streaming regex mining over sharded text corpora.

Shards are single files, either plain text with one document per line or
JSONL with a "text" field per line.  Mining scans every document with
every matcher independently; matches are non-overlapping per matcher,
with scanning resuming after the captured input sentence.  Captured
sentences shorter than 4 characters are dropped.

Output order is always (shard_id, doc_index, byte_offset), no matter how
many workers run, and a shard prefix that satisfied the per-bucket cap is
never extended, so reruns and worker counts cannot change the result.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Sequence

from .dsl import VERBALIZER_ROLE, CompiledMatcher, InputRole
from .errors import ShardIOError

MIN_TEXT_CHARS = 4
DEFAULT_PER_CLASS_CAP = 40_000


class ShardFormat(Enum):
    PLAIN_TEXT = "plain_text"
    JSONL_TEXT_FIELD = "jsonl"


@dataclass(frozen=True)
class CorpusShard:
    shard_id: int
    path: str
    format: ShardFormat


@dataclass
class ShardStats:
    documents: int = 0
    malformed: int = 0
    bytes_read: int = 0


@dataclass(frozen=True)
class MinedExample:
    """One weakly labeled example plus enough provenance to find it again."""

    label: str
    verbalizer: str
    shard_id: int
    doc_index: int
    byte_offset: int
    input: str | None = None
    hyp: str | None = None
    prem: str | None = None
    matched_span: str | None = None

    def ref(self) -> tuple[int, int, int]:
        return (self.shard_id, self.doc_index, self.byte_offset)

    def texts(self) -> tuple[str, ...]:
        if self.input is not None:
            return (self.input,)
        return (self.hyp or "", self.prem or "")

    def to_dict(self) -> dict:
        out: dict = {"label": self.label, "verbalizer": self.verbalizer}
        if self.input is not None:
            out["input"] = self.input
        else:
            out["hyp"] = self.hyp
            out["prem"] = self.prem
        out["shard_id"] = self.shard_id
        out["doc_index"] = self.doc_index
        out["byte_offset"] = self.byte_offset
        if self.matched_span is not None:
            out["matched_span"] = self.matched_span
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "MinedExample":
        return cls(
            label=obj["label"],
            verbalizer=obj["verbalizer"],
            shard_id=obj["shard_id"],
            doc_index=obj["doc_index"],
            byte_offset=obj["byte_offset"],
            input=obj.get("input"),
            hyp=obj.get("hyp"),
            prem=obj.get("prem"),
            matched_span=obj.get("matched_span"),
        )


def discover_shards(corpus_dir: str | Path) -> list[CorpusShard]:
    """Every regular file in the directory, sorted by name, is one shard.

    ``.jsonl`` files are read as JSONL with a ``text`` field, everything
    else as one plain-text document per line.
    """
    root = Path(corpus_dir)
    if not root.is_dir():
        raise ShardIOError(f"corpus directory not found: {corpus_dir}")
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise ShardIOError(f"corpus directory is empty: {corpus_dir}")
    return [
        CorpusShard(
            shard_id=shard_id,
            path=str(path),
            format=(
                ShardFormat.JSONL_TEXT_FIELD
                if path.suffix == ".jsonl"
                else ShardFormat.PLAIN_TEXT
            ),
        )
        for shard_id, path in enumerate(files)
    ]


def stream_documents(shard: CorpusShard, stats: ShardStats | None = None) -> Iterator[tuple[int, str]]:
    """Yield (doc_index, text) pairs in file order, one line at a time.

    doc_index is the physical line number, so provenance stays valid even
    when malformed JSONL lines are skipped.  Malformed lines are counted
    on ``stats`` rather than raised.
    """
    try:
        handle = open(shard.path, encoding="utf-8", errors="replace")
    except OSError as exc:
        raise ShardIOError(f"cannot open shard {shard.path}: {exc}") from exc
    with handle:
        try:
            for index, line in enumerate(handle):
                doc = line.rstrip("\n")
                if shard.format is ShardFormat.JSONL_TEXT_FIELD:
                    try:
                        obj = json.loads(doc)
                        text = obj["text"]
                    except (json.JSONDecodeError, KeyError, TypeError):
                        if stats is not None:
                            stats.malformed += 1
                        continue
                    if not isinstance(text, str):
                        if stats is not None:
                            stats.malformed += 1
                        continue
                else:
                    text = doc
                if stats is not None:
                    stats.documents += 1
                yield index, text
        except OSError as exc:
            raise ShardIOError(f"error reading shard {shard.path}: {exc}") from exc


class _PreparedMatchers:
    """Per-matcher needle and capture-group tables, computed once per scan.

    Rebuilding these inside the document loop dominated profile time on
    needle-free corpora, so shard scans hoist them here.
    """

    def __init__(self, matchers: Sequence[CompiledMatcher]) -> None:
        self.rows = [
            (order, matcher, matcher.prefilter_needles(), matcher.input_groups())
            for order, matcher in enumerate(matchers)
        ]
        self.all_needles = tuple(
            dict.fromkeys(needle for _, _, needles, _ in self.rows for needle in needles)
        )


def mine_document(
    doc: str,
    matchers: Sequence[CompiledMatcher],
    *,
    shard_id: int = 0,
    doc_index: int = 0,
    swap_roles: bool = False,
) -> list[MinedExample]:
    """Run every matcher over one document and build examples.

    Each matcher scans independently, so the same span may be mined under
    two labels.  Results are ordered by match offset, with the matcher
    list order breaking ties.
    """
    return _scan_document(
        doc,
        _PreparedMatchers(matchers),
        shard_id=shard_id,
        doc_index=doc_index,
        swap_roles=swap_roles,
    )


def _scan_document(
    doc: str,
    prepared: _PreparedMatchers,
    *,
    shard_id: int,
    doc_index: int,
    swap_roles: bool,
) -> list[MinedExample]:
    if not doc:
        return []
    folded = doc.casefold()
    if not any(needle in folded for needle in prepared.all_needles):
        return []
    # (char_offset, matcher_order, fields) triples, byte offsets resolved later
    pending: list[tuple[int, int, dict]] = []
    for order, matcher, needles, input_groups in prepared.rows:
        if not any(needle in folded for needle in needles):
            continue
        pos = 0
        while True:
            match = matcher.pattern.search(doc, pos)
            if match is None:
                break
            captured = {role: match.group(name) for name, role in input_groups}
            pos = max(match.end(name) for name, _ in input_groups)
            if any(len(text) < MIN_TEXT_CHARS for text in captured.values()):
                continue
            surface = match.group(matcher.verbalizer_group)
            fields: dict = {
                "label": matcher.label,
                "verbalizer": matcher.canonical_verbalizer(surface),
                "matched_span": match.group(0),
            }
            if InputRole.INPUT.value in captured:
                fields["input"] = captured[InputRole.INPUT.value]
            else:
                hyp = captured[InputRole.HYP.value]
                prem = captured[InputRole.PREM.value]
                if swap_roles:
                    hyp, prem = prem, hyp
                fields["hyp"] = hyp
                fields["prem"] = prem
            pending.append((match.start(), order, fields))

    if not pending:
        return []
    pending.sort(key=lambda item: (item[0], item[1]))

    examples = []
    ascii_doc = doc.isascii()
    prev_char = 0
    prev_byte = 0
    for char_offset, _, fields in pending:
        if ascii_doc:
            byte_offset = char_offset
        else:
            prev_byte += len(doc[prev_char:char_offset].encode("utf-8"))
            prev_char = char_offset
            byte_offset = prev_byte
        examples.append(
            MinedExample(
                shard_id=shard_id,
                doc_index=doc_index,
                byte_offset=byte_offset,
                **fields,
            )
        )
    return examples


@dataclass(frozen=True)
class MiningCaps:
    per_class: int = DEFAULT_PER_CLASS_CAP

    def __post_init__(self) -> None:
        if self.per_class < 1:
            raise ValueError("per_class cap must be at least 1")


@dataclass
class MiningStats:
    shards_processed: int = 0
    documents: int = 0
    malformed_records: int = 0
    bytes_read: int = 0
    examples_mined: int = 0
    per_class: dict[str, int] = field(default_factory=dict)
    per_verbalizer: dict[str, dict[str, int]] = field(default_factory=dict)
    early_stopped: bool = False
    elapsed_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "shards_processed": self.shards_processed,
            "documents": self.documents,
            "malformed_records": self.malformed_records,
            "bytes_read": self.bytes_read,
            "examples_mined": self.examples_mined,
            "per_class": self.per_class,
            "per_verbalizer": self.per_verbalizer,
            "early_stopped": self.early_stopped,
            "elapsed_seconds": self.elapsed_seconds,
        }


def _mine_shard(
    shard: CorpusShard, matchers: Sequence[CompiledMatcher], swap_roles: bool
) -> tuple[list[MinedExample], ShardStats]:
    stats = ShardStats()
    examples: list[MinedExample] = []
    prepared = _PreparedMatchers(matchers)
    for doc_index, text in stream_documents(shard, stats):
        examples.extend(
            _scan_document(
                text,
                prepared,
                shard_id=shard.shard_id,
                doc_index=doc_index,
                swap_roles=swap_roles,
            )
        )
    try:
        stats.bytes_read = os.path.getsize(shard.path)
    except OSError:
        stats.bytes_read = 0
    return examples, stats


class _BucketBoard:
    """Tracks per-(class, verbalizer) counts for the early-stop decision."""

    def __init__(self, matchers: Sequence[CompiledMatcher], per_class: int) -> None:
        self.per_class = per_class
        self.counts: dict[tuple[str, str], int] = {}
        for matcher in matchers:
            for verbalizer in matcher.verbalizers_embedded:
                self.counts.setdefault((matcher.label, verbalizer), 0)

    def add(self, example: MinedExample) -> None:
        self.counts[(example.label, example.verbalizer)] = (
            self.counts.get((example.label, example.verbalizer), 0) + 1
        )

    def saturated(self) -> bool:
        return all(count >= self.per_class for count in self.counts.values())


def mine_corpus(
    shards: Sequence[CorpusShard],
    matchers: Sequence[CompiledMatcher],
    caps: MiningCaps = MiningCaps(),
    workers: int = 1,
    *,
    swap_roles: bool = False,
    dedup_exact_text: bool = False,
) -> tuple[list[MinedExample], MiningStats]:
    """Mine every shard, merging results in shard_id order.

    Shards are independent work units; with ``workers > 1`` they are
    processed in a process pool, but results are incorporated strictly in
    shard order, and early termination cuts at a shard boundary, so the
    output is byte-identical for any worker count.

    Args:
        shards: corpus shards; processed in shard_id order.
        matchers: compiled matchers, one per (pattern, class).
        caps: early termination fires once every (class, verbalizer)
            bucket holds at least ``caps.per_class`` examples.
        workers: process count; 1 runs inline.
        swap_roles: exchange hyp/prem in pair-task captures.
        dedup_exact_text: drop examples whose extracted text duplicates an
            earlier example of the same label.
    """
    started = time.monotonic()
    ordered = sorted(shards, key=lambda s: s.shard_id)
    board = _BucketBoard(matchers, caps.per_class)
    stats = MiningStats()
    merged: list[MinedExample] = []
    seen_texts: set[tuple[str, tuple[str, ...]]] = set()

    def incorporate(examples: list[MinedExample], shard_stats: ShardStats) -> None:
        stats.shards_processed += 1
        stats.documents += shard_stats.documents
        stats.malformed_records += shard_stats.malformed
        stats.bytes_read += shard_stats.bytes_read
        for example in examples:
            if dedup_exact_text:
                key = (example.label, example.texts())
                if key in seen_texts:
                    continue
                seen_texts.add(key)
            merged.append(example)
            board.add(example)

    if workers <= 1 or len(ordered) <= 1:
        for shard in ordered:
            incorporate(*_mine_shard(shard, matchers, swap_roles))
            if board.saturated():
                stats.early_stopped = stats.shards_processed < len(ordered)
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            window = workers * 2
            futures = {}
            next_submit = 0
            next_take = 0
            while next_take < len(ordered):
                while next_submit < len(ordered) and next_submit - next_take < window:
                    futures[next_submit] = pool.submit(
                        _mine_shard, ordered[next_submit], matchers, swap_roles
                    )
                    next_submit += 1
                incorporate(*futures.pop(next_take).result())
                next_take += 1
                if board.saturated():
                    stats.early_stopped = next_take < len(ordered)
                    for future in futures.values():
                        future.cancel()
                    break

    for (label, verbalizer), count in board.counts.items():
        if count == 0:
            continue
        stats.per_class[label] = stats.per_class.get(label, 0) + count
        stats.per_verbalizer.setdefault(label, {})[verbalizer] = count
    stats.examples_mined = len(merged)
    stats.elapsed_seconds = time.monotonic() - started
    return merged, stats


def write_mined(path: str | Path, examples: Sequence[MinedExample]) -> None:
    """Write mined examples as JSONL with every field, matched span included."""
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            handle.write(json.dumps(example.to_dict(), ensure_ascii=False) + "\n")


def read_mined(path: str | Path) -> list[MinedExample]:
    with open(path, encoding="utf-8") as handle:
        return [MinedExample.from_dict(json.loads(line)) for line in handle if line.strip()]
