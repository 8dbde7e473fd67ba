"""Task definitions: patterns plus per-class verbalizer lists.

A task file is JSON with this shape (extra keys are allowed and ignored):

    {
      "task": "sentiment",
      "arity": "single",
      "patterns": ["(is|was) {VERBALIZER}*. {INPUT}"],
      "classes": [
        {"label": "positive", "verbalizers": ["good", "great"]},
        {"label": "negative", "verbalizers": ["bad", "awful"]}
      ],
      "swap_roles": false
    }

The first verbalizer of each class is the designated one used by
single-verbalizer scorers.  ``swap_roles`` exchanges the hyp/prem roles
of pair-task captures and can also be forced from the command line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import dsl
from .errors import InvalidTask

_ARITY_NAMES = {
    "single": dsl.Arity.SINGLE_INPUT,
    "single_input": dsl.Arity.SINGLE_INPUT,
    "pair": dsl.Arity.PAIR_INPUT,
    "pair_input": dsl.Arity.PAIR_INPUT,
}


@dataclass(frozen=True)
class TaskSpec:
    name: str
    arity: dsl.Arity
    patterns: tuple[dsl.PatternTemplate, ...]
    classes: tuple[dsl.VerbalizerSet, ...]
    swap_roles: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise InvalidTask("task name must be non-empty")
        if not self.patterns:
            raise InvalidTask(f"task {self.name!r} declares no patterns")
        if not self.classes:
            raise InvalidTask(f"task {self.name!r} declares no classes")
        seen_labels: set[str] = set()
        seen_verbalizers: dict[str, str] = {}
        for cls in self.classes:
            if cls.label in seen_labels:
                raise InvalidTask(f"duplicate class label {cls.label!r}")
            seen_labels.add(cls.label)
            for verbalizer in cls.verbalizers:
                owner = seen_verbalizers.get(verbalizer)
                if owner is not None:
                    raise InvalidTask(
                        f"verbalizer {verbalizer!r} appears under both "
                        f"{owner!r} and {cls.label!r}"
                    )
                seen_verbalizers[verbalizer] = cls.label

    @property
    def labels(self) -> list[str]:
        return [cls.label for cls in self.classes]

    def class_named(self, label: str) -> dsl.VerbalizerSet:
        for cls in self.classes:
            if cls.label == label:
                return cls
        raise InvalidTask(f"task {self.name!r} has no class {label!r}")

    def matchers(self) -> list[dsl.CompiledMatcher]:
        """One compiled matcher per (pattern, class), pattern-major order."""
        return [
            dsl.compile(template, cls)
            for template in self.patterns
            for cls in self.classes
        ]


def task_from_dict(obj: dict) -> TaskSpec:
    try:
        name = obj["task"]
        arity_name = obj["arity"]
        raw_patterns = obj["patterns"]
        raw_classes = obj["classes"]
    except (KeyError, TypeError) as exc:
        raise InvalidTask(f"task definition is missing required key: {exc}") from exc

    arity = _ARITY_NAMES.get(str(arity_name).lower())
    if arity is None:
        raise InvalidTask(f"unknown arity {arity_name!r}")

    patterns = tuple(dsl.parse_template(text, arity) for text in raw_patterns)
    classes = tuple(
        dsl.VerbalizerSet(label=c["label"], verbalizers=tuple(c["verbalizers"]))
        for c in raw_classes
    )
    return TaskSpec(
        name=name,
        arity=arity,
        patterns=patterns,
        classes=classes,
        swap_roles=bool(obj.get("swap_roles", False)),
    )


def load_task(path: str | Path) -> TaskSpec:
    """Load and validate a task definition file."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidTask(f"cannot read task file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidTask(f"task file {path} is not valid JSON: {exc}") from exc
    return task_from_dict(obj)
