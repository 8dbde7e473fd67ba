"""Exception types shared across the toolkit."""

from __future__ import annotations


class PatternMineError(Exception):
    """Base class for every error raised by this package."""


class MalformedTemplate(PatternMineError):
    """A pattern template could not be parsed."""


class CompileError(PatternMineError):
    """A parsed template could not be turned into a working matcher."""


class InvalidTask(PatternMineError):
    """A task definition violates a structural rule."""


class ShardIOError(PatternMineError):
    """A corpus shard could not be opened or read."""


class EmptyClass(PatternMineError):
    """A class ended up with zero usable examples."""


class MissingScore(PatternMineError):
    """An example has no matching score record."""


class DuplicateScore(PatternMineError):
    """Two score records share the same example_ref."""


class EmptyInput(PatternMineError):
    """An operation that needs at least one example received none."""


class DegenerateVocabulary(PatternMineError):
    """Feature extraction produced an empty vocabulary."""


class DivergenceDetected(PatternMineError):
    """The training loss became non-finite."""


class UnknownLabel(PatternMineError):
    """An eval set contains a label the model was never trained on."""
