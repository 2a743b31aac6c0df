"""Exception types raised by the harness.

Everything user-facing (bad files, bad config, degenerate corpora) derives
from :class:`SerfuseError` so the CLI can map it to the validation exit
code; programming-contract violations use plain ValueError.
"""


class SerfuseError(Exception):
    """Base class for harness-level errors."""


class ManifestError(SerfuseError):
    """Manifest file cannot be parsed or violates corpus invariants."""


class FeatureSetError(SerfuseError):
    """Feature file is malformed, incomplete, or inconsistent with a manifest."""


class CodebookError(SerfuseError):
    """Codebook cannot be learnt or loaded."""


class TranscriptError(SerfuseError):
    """A requested transcript source is missing or unusable."""


class TrainingError(SerfuseError):
    """Classifier training is impossible on the given split."""


class FusionError(SerfuseError):
    """Fusion search preconditions are not met (e.g. missing caches)."""


class ConfigError(SerfuseError):
    """Run configuration is missing, malformed, or references absent paths."""
