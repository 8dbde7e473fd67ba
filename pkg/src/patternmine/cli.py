"""Command line interface for the mining pipeline.

Subcommands map one-to-one onto the library: compile, mine, balance,
score, filter, build (mine + balance + filter + export), train, eval,
agreement, and report.  Every artifact-writing subcommand also writes a
JSON run-report with the tool version, the resolved configuration, and
SHA-256 digests of its inputs.  Errors exit non-zero with a one-line JSON
object on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__, builder, filtering, miner, trainer
from .errors import PatternMineError
from .task import TaskSpec, load_task

WORKERS_ENV = "PATTERNMINE_WORKERS"


def _sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _corpus_digest(shards: list[miner.CorpusShard]) -> str:
    digest = hashlib.sha256()
    for shard in shards:
        digest.update(Path(shard.path).name.encode("utf-8"))
        digest.update(bytes.fromhex(_sha256_file(shard.path)))
    return digest.hexdigest()


def _write_run_report(path: Path, subcommand: str, config: dict, inputs: dict, **extra) -> None:
    report = {
        "tool": "patternmine",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "input_digests": inputs,
    }
    report.update(extra)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _resolve_workers(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise PatternMineError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


def _effective_task(args) -> TaskSpec:
    task = load_task(args.task)
    if getattr(args, "swap_nli_roles", False) and not task.swap_roles:
        task = TaskSpec(
            name=task.name,
            arity=task.arity,
            patterns=task.patterns,
            classes=task.classes,
            swap_roles=True,
        )
    return task


def _load_scores(spec: str, dataset: list[miner.MinedExample], seed: int) -> list[filtering.ScoreRecord]:
    if spec == "builtin":
        ds = builder.BalancedDataset.from_examples(dataset, seed=seed)
        return filtering.builtin_score(ds)
    if spec.startswith("file:"):
        return filtering.read_scores(spec[len("file:") :])
    raise PatternMineError(f"unknown scorer {spec!r}; use 'builtin' or 'file:PATH'")


def cmd_compile(args) -> int:
    from . import dsl

    task = _effective_task(args)
    matchers = []
    for template in task.patterns:
        for cls in task.classes:
            matcher = dsl.compile(template, cls)
            matchers.append(
                {
                    "pattern": template.raw,
                    "label": matcher.label,
                    "regex": matcher.regex_source,
                    "capture_map": matcher.capture_map,
                    "verbalizers": list(matcher.verbalizers_embedded),
                }
            )
    payload = json.dumps({"task": task.name, "matchers": matchers}, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        _write_run_report(
            Path(args.out + ".run.json"),
            "compile",
            {"task": args.task},
            {"task": _sha256_file(args.task)},
        )
    else:
        print(payload)
    return 0


def cmd_mine(args) -> int:
    task = _effective_task(args)
    shards = miner.discover_shards(args.corpus)
    workers = _resolve_workers(args.workers)
    examples, stats = miner.mine_corpus(
        shards,
        task.matchers(),
        caps=miner.MiningCaps(per_class=args.cap),
        workers=workers,
        swap_roles=task.swap_roles,
        dedup_exact_text=args.dedup,
    )
    miner.write_mined(args.out, examples)
    _write_run_report(
        Path(args.out + ".run.json"),
        "mine",
        {
            "task": args.task,
            "corpus": args.corpus,
            "cap": args.cap,
            "workers": workers,
            "swap_roles": task.swap_roles,
            "dedup": args.dedup,
        },
        {"task": _sha256_file(args.task), "corpus": _corpus_digest(shards)},
        mining_stats=stats.to_dict(),
    )
    print(f"mined {len(examples)} examples from {stats.shards_processed} shards")
    return 0


def cmd_balance(args) -> int:
    task = _effective_task(args)
    mined = miner.read_mined(args.mined)
    ds = builder.balance(mined, cap=args.cap, seed=args.seed, task=task)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_path = out_dir / "dataset.jsonl"
    manifest = builder.export(
        ds,
        dataset_path,
        task_name=task.name,
        task_sha256=_sha256_file(args.task),
        sampler=builder.SamplerSpec(seed=args.seed),
    )
    builder.write_manifest(manifest, out_dir / "manifest.json")
    _write_run_report(
        out_dir / "run_report.json",
        "balance",
        {"task": args.task, "mined": args.mined, "cap": args.cap, "seed": args.seed},
        {"task": _sha256_file(args.task), "mined": _sha256_file(args.mined)},
    )
    print(f"balanced dataset: {manifest.n_examples} examples -> {dataset_path}")
    return 0


def cmd_score(args) -> int:
    dataset = builder.load_dataset(args.dataset)
    scores = _load_scores("builtin", dataset, args.seed)
    filtering.write_scores(args.out, scores)
    _write_run_report(
        Path(args.out + ".run.json"),
        "score",
        {"dataset": args.dataset, "scorer": "builtin", "seed": args.seed},
        {"dataset": _sha256_file(args.dataset)},
    )
    print(f"scored {len(scores)} examples -> {args.out}")
    return 0


def cmd_filter(args) -> int:
    dataset = builder.load_dataset(args.dataset)
    scores = _load_scores(args.scorer, dataset, args.seed)
    kept, removed, report = filtering.filter_mismatches(
        dataset, scores, fraction=args.filter_fraction, per_class=args.per_class
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_path = out_dir / "dataset.jsonl"
    with open(dataset_path, "w", encoding="utf-8") as handle:
        for example in kept:
            handle.write(builder.dataset_line(example) + "\n")
    (out_dir / "filter_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_run_report(
        out_dir / "run_report.json",
        "filter",
        {
            "dataset": args.dataset,
            "scorer": args.scorer,
            "filter_fraction": args.filter_fraction,
            "per_class": args.per_class,
        },
        {"dataset": _sha256_file(args.dataset)},
        filter_report=report.to_dict(),
    )
    print(
        f"kept {len(kept)}, removed {len(removed)} "
        f"(agreement {report.agreement_pct:.1f}%) -> {dataset_path}"
    )
    return 0


def cmd_build(args) -> int:
    task = _effective_task(args)
    shards = miner.discover_shards(args.corpus)
    workers = _resolve_workers(args.workers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # a bucket never contributes more than the class cap, so mining may
    # stop once every bucket holds that many
    mined, stats = miner.mine_corpus(
        shards,
        task.matchers(),
        caps=miner.MiningCaps(per_class=args.cap),
        workers=workers,
        swap_roles=task.swap_roles,
        dedup_exact_text=args.dedup,
    )
    miner.write_mined(out_dir / "mined.jsonl", mined)
    ds = builder.balance(mined, cap=args.cap, seed=args.seed, task=task)

    filter_info = None
    if not args.no_filter:
        scores = _load_scores(args.scorer, list(ds.examples), args.seed)
        filtering.write_scores(out_dir / "scores.jsonl", scores)
        kept, removed, report = filtering.filter_mismatches(
            list(ds.examples), scores, fraction=args.filter_fraction, per_class=args.per_class
        )
        filter_info = dict(report.to_dict())
        filter_info["pre_filter_per_class_counts"] = dict(ds.per_class_counts)
        (out_dir / "filter_report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        ds = builder.BalancedDataset.from_examples(kept, cap=ds.cap, seed=ds.seed)

    dataset_path = out_dir / "dataset.jsonl"
    manifest = builder.export(
        ds,
        dataset_path,
        task_name=task.name,
        task_sha256=_sha256_file(args.task),
        sampler=builder.SamplerSpec(seed=args.seed),
        filter_info=filter_info,
    )
    builder.write_manifest(manifest, out_dir / "manifest.json")
    _write_run_report(
        out_dir / "run_report.json",
        "build",
        {
            "task": args.task,
            "corpus": args.corpus,
            "cap": args.cap,
            "seed": args.seed,
            "filter_fraction": None if args.no_filter else args.filter_fraction,
            "scorer": None if args.no_filter else args.scorer,
            "per_class": args.per_class,
            "workers": workers,
            "swap_roles": task.swap_roles,
            "dedup": args.dedup,
        },
        {"task": _sha256_file(args.task), "corpus": _corpus_digest(shards)},
        mining_stats=stats.to_dict(),
    )
    print(f"built dataset: {manifest.n_examples} examples -> {dataset_path}")
    return 0


def cmd_train(args) -> int:
    dataset = builder.load_dataset(args.dataset)
    ds = builder.BalancedDataset.from_examples(dataset, seed=args.seed)
    spec = builder.SamplerSpec(seed=args.seed, batch_size=args.batch_size)
    history: list[float] = []
    model = trainer.train(
        ds, spec, steps=args.steps, lr=args.lr, on_step=lambda _, loss: history.append(loss)
    )
    model.save(args.out)
    _write_run_report(
        Path(args.out + ".run.json"),
        "train",
        {
            "dataset": args.dataset,
            "seed": args.seed,
            "steps": args.steps,
            "lr": args.lr,
            "batch_size": args.batch_size,
        },
        {"dataset": _sha256_file(args.dataset)},
        loss_history=history,
    )
    print(f"trained {len(model.labels)}-class model ({len(model.vocab)} features) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = trainer.LinearModel.load(args.model)
    labeled = trainer.load_eval_set(args.eval_set)
    result = trainer.evaluate(model, labeled)
    payload = json.dumps(result.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    print(payload)
    return 0


def cmd_agreement(args) -> int:
    dataset = builder.load_dataset(args.dataset)
    if args.scores:
        scores = filtering.read_scores(args.scores)
    else:
        scores = _load_scores(args.scorer, dataset, args.seed)
    agreement = filtering.label_agreement(dataset, scores)
    print(json.dumps({"agreement_pct": agreement, "n_examples": len(dataset)}))
    return 0


def cmd_report(args) -> int:
    from . import report as report_module

    manifest = report_module.load_json(args.manifest) if args.manifest else None
    filter_report = report_module.load_json(args.filter_report) if args.filter_report else None
    scores = filtering.read_scores(args.scores) if args.scores else None
    loss_history = None
    if args.train_report:
        loss_history = report_module.load_json(args.train_report).get("loss_history")
    if manifest is None and filter_report is None and scores is None and loss_history is None:
        raise PatternMineError("report needs at least one input artifact")
    written = report_module.render_report(
        args.out,
        manifest=manifest,
        filter_report=filter_report,
        scores=scores,
        loss_history=loss_history,
    )
    inputs = {
        name: _sha256_file(value)
        for name, value in [
            ("manifest", args.manifest),
            ("filter_report", args.filter_report),
            ("scores", args.scores),
            ("train_report", args.train_report),
        ]
        if value
    }
    _write_run_report(
        Path(args.out) / "run_report.json",
        "report",
        {
            "manifest": args.manifest,
            "filter_report": args.filter_report,
            "scores": args.scores,
            "train_report": args.train_report,
        },
        inputs,
        artifacts=written,
    )
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patternmine",
        description="Mine weakly labeled datasets from text corpora with regex patterns.",
    )
    parser.add_argument("--version", action="version", version=f"patternmine {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_task(p):
        p.add_argument("--task", required=True, help="task definition JSON file")
        p.add_argument(
            "--swap-nli-roles",
            action="store_true",
            help="swap hyp/prem roles in pair-task captures",
        )

    p = sub.add_parser("compile", help="dump the compiled regex per (pattern, class)")
    add_task(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("mine", help="mine examples from a corpus directory")
    add_task(p)
    p.add_argument("--corpus", required=True, help="directory of shard files")
    p.add_argument("--out", required=True, help="mined examples JSONL")
    p.add_argument("--cap", type=int, default=miner.DEFAULT_PER_CLASS_CAP)
    p.add_argument("--workers", type=int, default=None, help=f"default ${WORKERS_ENV} or 1")
    p.add_argument("--dedup", action="store_true", help="drop exact duplicate texts per label")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("balance", help="balance mined examples and export a dataset")
    add_task(p)
    p.add_argument("--mined", required=True, help="mined examples JSONL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cap", type=int, default=builder.DEFAULT_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("score", help="score a dataset with the built-in scorer")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="score file JSONL")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("filter", help="drop the most confident label mismatches")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scorer", default="builtin", help="'builtin' or 'file:PATH'")
    p.add_argument("--filter-fraction", type=float, default=filtering.DEFAULT_FILTER_FRACTION)
    p.add_argument("--per-class", action="store_true", help="filter within each class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("build", help="mine, balance, filter, and export in one run")
    add_task(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cap", type=int, default=builder.DEFAULT_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filter-fraction", type=float, default=filtering.DEFAULT_FILTER_FRACTION)
    p.add_argument("--scorer", default="builtin", help="'builtin' or 'file:PATH'")
    p.add_argument("--per-class", action="store_true")
    p.add_argument("--no-filter", action="store_true", help="skip the filtering step")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--dedup", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="train the surrogate linear classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="model JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=trainer.DEFAULT_STEPS)
    p.add_argument("--lr", type=float, default=trainer.DEFAULT_LR)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on a labeled set")
    p.add_argument("--model", required=True)
    p.add_argument("--eval-set", required=True, help="JSONL of {text|hyp,prem, label}")
    p.add_argument("--out", help="also write the result JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agreement", help="print mined-vs-predicted label agreement")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scores", help="score file JSONL; omit to use the built-in scorer")
    p.add_argument("--scorer", default="builtin")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("report", help="render CSV tables and figures from artifacts")
    p.add_argument("--manifest")
    p.add_argument("--filter-report")
    p.add_argument("--scores")
    p.add_argument("--train-report", help="train run-report JSON with loss_history")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PatternMineError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
