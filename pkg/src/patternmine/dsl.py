"""Prompt-style pattern templates and their compilation to regexes.

A template mixes literal text with three kinds of keywords:

* ``{VERBALIZER}`` stands for any member of a class's verbalizer list and
  compiles to a capturing alternation such as ``(good|great|awesome)``.
* ``*`` lazily matches a run of non-sentence-ending characters.
* ``{INPUT}`` (or ``{INPUT:HYP}`` / ``{INPUT:PREM}`` for pair tasks)
  captures a single sentence: one or more non-terminator characters
  followed by a run of ``.``, ``!`` or ``?``.

Matching is always case-insensitive.  Literal text is escaped, with two
exceptions: a ``.`` directly after ``*`` compiles to the terminator class
``[.!?]+``, and a literal fragment before the verbalizer slot that is
already a parenthesized alternation of plain words (``(is|was)``) passes
through as regex syntax.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .errors import CompileError, InvalidTask, MalformedTemplate

SENTENCE_TERMINATORS = ".!?"

STAR_BODY = r"[^.!?]*?"
TERMINATOR_RUN = r"[.!?]+"
SENTENCE_BODY = r"[^.!?]+[.!?]+"

VERBALIZER_ROLE = "VERBALIZER"


class Arity(Enum):
    SINGLE_INPUT = "single"
    PAIR_INPUT = "pair"


class InputRole(Enum):
    INPUT = "INPUT"
    HYP = "HYP"
    PREM = "PREM"


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class VerbalizerSlot:
    pass


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class InputSlot:
    role: InputRole


Token = Union[Literal, VerbalizerSlot, Star, InputSlot]

_KEYWORD_TOKENS = {
    "{VERBALIZER}": VerbalizerSlot(),
    "{INPUT}": InputSlot(InputRole.INPUT),
    "{INPUT:HYP}": InputSlot(InputRole.HYP),
    "{INPUT:PREM}": InputSlot(InputRole.PREM),
}

_KEYWORD_TEXT = {
    VerbalizerSlot(): "{VERBALIZER}",
    InputSlot(InputRole.INPUT): "{INPUT}",
    InputSlot(InputRole.HYP): "{INPUT:HYP}",
    InputSlot(InputRole.PREM): "{INPUT:PREM}",
}


@dataclass(frozen=True)
class PatternTemplate:
    """A parsed template together with the raw text it came from."""

    raw: str
    arity: Arity
    tokens: tuple[Token, ...]

    def serialize(self) -> str:
        parts = []
        for token in self.tokens:
            if isinstance(token, Literal):
                parts.append(token.text)
            elif isinstance(token, Star):
                parts.append("*")
            else:
                parts.append(_KEYWORD_TEXT[token])
        return "".join(parts)


def parse_template(raw: str, arity: Arity) -> PatternTemplate:
    """Parse raw template text into tokens, validating slot counts.

    Args:
        raw: template text, e.g. ``"(is|was) {VERBALIZER}*. {INPUT}"``.
        arity: whether the template captures one input or a hyp/prem pair.

    Raises:
        MalformedTemplate: on unbalanced braces, unknown keywords, or a
            slot inventory that does not match the arity.
    """
    tokens: list[Token] = []
    buffer: list[str] = []

    def flush() -> None:
        if buffer:
            tokens.append(Literal("".join(buffer)))
            buffer.clear()

    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "{":
            close = raw.find("}", i)
            if close < 0:
                raise MalformedTemplate(f"unbalanced brace at position {i} in {raw!r}")
            keyword = raw[i : close + 1]
            token = _KEYWORD_TOKENS.get(keyword)
            if token is None:
                raise MalformedTemplate(f"unknown keyword {keyword!r} in {raw!r}")
            flush()
            tokens.append(token)
            i = close + 1
        elif ch == "}":
            raise MalformedTemplate(f"unbalanced brace at position {i} in {raw!r}")
        elif ch == "*":
            flush()
            tokens.append(Star())
            i += 1
        else:
            buffer.append(ch)
            i += 1
    flush()

    _check_slots(raw, arity, tokens)
    return PatternTemplate(raw=raw, arity=arity, tokens=tuple(tokens))


def _check_slots(raw: str, arity: Arity, tokens: list[Token]) -> None:
    n_verbalizer = sum(isinstance(t, VerbalizerSlot) for t in tokens)
    roles = [t.role for t in tokens if isinstance(t, InputSlot)]
    if n_verbalizer != 1:
        raise MalformedTemplate(
            f"template needs exactly one {{VERBALIZER}} slot, found {n_verbalizer}: {raw!r}"
        )
    if arity is Arity.SINGLE_INPUT:
        if roles != [InputRole.INPUT]:
            raise MalformedTemplate(
                f"single-input template needs exactly one {{INPUT}} slot: {raw!r}"
            )
    else:
        if sorted(r.value for r in roles) != ["HYP", "PREM"]:
            raise MalformedTemplate(
                f"pair template needs exactly one {{INPUT:HYP}} and one {{INPUT:PREM}}: {raw!r}"
            )


@dataclass(frozen=True)
class VerbalizerSet:
    """One class label and the verbalizers that stand in for it."""

    label: str
    verbalizers: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.label:
            raise InvalidTask("class label must be a non-empty string")
        if not self.verbalizers:
            raise InvalidTask(f"class {self.label!r} needs at least one verbalizer")
        for verbalizer in self.verbalizers:
            if not verbalizer:
                raise InvalidTask(f"class {self.label!r} has an empty verbalizer")
            if any(t in verbalizer for t in SENTENCE_TERMINATORS):
                raise InvalidTask(
                    f"verbalizer {verbalizer!r} contains a sentence terminator"
                )


def expand_verbalizer_group(verbalizer_set: VerbalizerSet) -> str:
    """Render a verbalizer list as a capturing alternation group.

    Members are escaped so regex metacharacters match literally; the
    engine-level escape of spaces (``For\\ this\\ reason``) still matches
    the plain string.
    """
    return "(" + "|".join(re.escape(v) for v in verbalizer_set.verbalizers) + ")"


@dataclass(frozen=True)
class CompiledMatcher:
    """A class-specific regex built from one template and one verbalizer set.

    ``capture_map`` maps group identifiers to roles.  Input slots compile
    to named groups, keyed by their role name.  The verbalizer alternation
    stays a plain positional group so its source text is exactly the
    expanded alternation; it is keyed by its group number as a string.
    """

    label: str
    regex_source: str
    capture_map: dict[str, str]
    verbalizers_embedded: tuple[str, ...]
    verbalizer_group: int
    pattern: re.Pattern = field(repr=False, compare=False)

    def canonical_verbalizer(self, surface: str) -> str:
        """Map matched surface text back to the declared verbalizer."""
        folded = surface.casefold()
        for member in self.verbalizers_embedded:
            if member.casefold() == folded:
                return member
        raise CompileError(
            f"matched text {surface!r} is not a verbalizer of class {self.label!r}"
        )

    def prefilter_needles(self) -> tuple[str, ...]:
        """Casefolded substrings, at least one of which any match contains."""
        return tuple(v.casefold() for v in self.verbalizers_embedded)

    def input_groups(self) -> list[tuple[str, str]]:
        """(group name, role) pairs for the sentence-capturing groups."""
        return [(g, r) for g, r in self.capture_map.items() if r != VERBALIZER_ROLE]


# A literal fragment that is already an alternation of plain words, e.g.
# "(is|was)"; such fragments pass through to the regex unescaped.
_WORD_ALTERNATION = re.compile(r"\((?:\w+\|)+\w+\)")


def _compile_literal(text: str, *, after_star: bool, before_verbalizer: bool) -> tuple[str, int]:
    """Compile literal template text, returning (fragment, capturing groups)."""
    parts: list[str] = []
    groups = 0
    i = 0
    if after_star and text.startswith("."):
        parts.append(TERMINATOR_RUN)
        i = 1
    while i < len(text):
        if before_verbalizer:
            m = _WORD_ALTERNATION.match(text, i)
            if m:
                parts.append(m.group(0))
                groups += 1
                i = m.end()
                continue
        ch = text[i]
        if ch.isspace():
            j = i + 1
            while j < len(text) and text[j].isspace():
                j += 1
            parts.append(r"\s+")
            i = j
        else:
            parts.append(re.escape(ch))
            i += 1
    return "".join(parts), groups


def compile(template: PatternTemplate, verbalizer_set: VerbalizerSet) -> CompiledMatcher:
    """Compile one template against one class's verbalizers.

    The result matches case-insensitively and captures the verbalizer
    member plus every input sentence.  Compilation is deterministic: the
    same inputs always produce the same regex source.
    """
    parts: list[str] = []
    capture_map: dict[str, str] = {}
    group_count = 0
    verbalizer_group = 0
    seen_verbalizer = False

    for index, token in enumerate(template.tokens):
        if isinstance(token, Literal):
            after_star = index > 0 and isinstance(template.tokens[index - 1], Star)
            fragment, groups = _compile_literal(
                token.text, after_star=after_star, before_verbalizer=not seen_verbalizer
            )
            parts.append(fragment)
            group_count += groups
        elif isinstance(token, VerbalizerSlot):
            parts.append(expand_verbalizer_group(verbalizer_set))
            group_count += 1
            verbalizer_group = group_count
            capture_map[str(verbalizer_group)] = VERBALIZER_ROLE
            seen_verbalizer = True
        elif isinstance(token, Star):
            parts.append(STAR_BODY)
        elif isinstance(token, InputSlot):
            parts.append(f"(?P<{token.role.value}>{SENTENCE_BODY})")
            group_count += 1
            capture_map[token.role.value] = token.role.value

    regex_source = "".join(parts)
    try:
        pattern = re.compile(regex_source, re.IGNORECASE)
    except re.error as exc:
        raise CompileError(f"template {template.raw!r} compiled to invalid regex: {exc}") from exc

    return CompiledMatcher(
        label=verbalizer_set.label,
        regex_source=regex_source,
        capture_map=capture_map,
        verbalizers_embedded=tuple(verbalizer_set.verbalizers),
        verbalizer_group=verbalizer_group,
        pattern=pattern,
    )
