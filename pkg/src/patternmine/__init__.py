"""patternmine: mine weakly labeled datasets from text corpora with regex patterns."""

__version__ = "0.1.0"
