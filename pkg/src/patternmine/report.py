"""Render dataset and run summaries as CSV tables and matplotlib figures.

Everything here works from the JSON artifacts other subcommands write, so
a report can be regenerated at any time without re-running the pipeline.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .filtering import ScoreRecord


def write_counts_csv(manifest: dict, path: str | Path) -> None:
    """One row per (class, verbalizer) with its example count."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label", "verbalizer", "count"])
        per_verbalizer = manifest.get("per_verbalizer_counts", {})
        for label in sorted(per_verbalizer):
            for verbalizer, count in sorted(per_verbalizer[label].items()):
                writer.writerow([label, verbalizer, count])


def write_filter_csv(filter_report: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value"])
        for key in sorted(filter_report):
            writer.writerow([key, filter_report[key]])


def figure_class_balance(manifest: dict, path: str | Path) -> None:
    """Stacked bars: per-class example counts broken down by verbalizer."""
    per_verbalizer = manifest.get("per_verbalizer_counts", {})
    labels = sorted(per_verbalizer)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels)), 4.0))
    for i, label in enumerate(labels):
        bottom = 0
        for verbalizer, count in sorted(per_verbalizer[label].items()):
            ax.bar(i, count, bottom=bottom, width=0.7)
            if count > 0:
                ax.annotate(
                    verbalizer,
                    (i, bottom + count / 2),
                    ha="center",
                    va="center",
                    fontsize=7,
                )
            bottom += count
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("examples")
    ax.set_title("Per-class counts by verbalizer")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figure_confidence(scores: Sequence[ScoreRecord], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.hist([score.confidence for score in scores], bins=30, range=(0.0, 1.0))
    ax.set_xlabel("scorer confidence")
    ax.set_ylabel("examples")
    ax.set_title("Score confidence distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figure_filter(filter_report: dict, path: str | Path) -> None:
    n = filter_report["n_examples"]
    mismatches = filter_report["n_mismatches"]
    removed = filter_report["n_removed"]
    parts = {
        "matches": n - mismatches,
        "mismatches kept": mismatches - removed,
        "removed": removed,
    }
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.bar(list(parts), list(parts.values()))
    ax.set_ylabel("examples")
    ax.set_title(f"Filter outcome (agreement {filter_report['agreement_pct']:.1f}%)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figure_loss(history: Sequence[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.plot(range(len(history)), history, linewidth=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("batch loss")
    ax.set_title("Surrogate training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(
    out_dir: str | Path,
    *,
    manifest: dict | None = None,
    filter_report: dict | None = None,
    scores: Sequence[ScoreRecord] | None = None,
    loss_history: Sequence[float] | None = None,
) -> list[str]:
    """Write every figure and table the given inputs allow; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def emit(name: str, render) -> None:
        target = out / name
        render(target)
        written.append(str(target))

    if manifest is not None:
        emit("counts.csv", lambda p: write_counts_csv(manifest, p))
        emit("class_balance.png", lambda p: figure_class_balance(manifest, p))
    if filter_report is not None:
        emit("filter.csv", lambda p: write_filter_csv(filter_report, p))
        emit("filter_outcome.png", lambda p: figure_filter(filter_report, p))
    if scores is not None:
        emit("confidence.png", lambda p: figure_confidence(scores, p))
    if loss_history is not None:
        emit("loss_curve.png", lambda p: figure_loss(loss_history, p))
    return written


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
