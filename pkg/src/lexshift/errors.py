"""Exception hierarchy shared across the pipeline."""


class LexshiftError(Exception):
    """Base class for all lexshift errors."""


class ConfigError(LexshiftError):
    """Invalid or inconsistent pipeline configuration."""


class DataError(LexshiftError):
    """Malformed or unusable input data."""


class MissingArtifactError(LexshiftError):
    """A pipeline stage was run before its upstream artifacts exist."""

    def __init__(self, stage: str, needed: str):
        super().__init__(f"stage '{stage}' needs artifacts from '{needed}'; run '{needed}' first")
        self.stage = stage
        self.needed = needed


class OOVError(LexshiftError):
    """A queried word is not in a model's vocabulary."""

    def __init__(self, word: str, slice_id: str):
        super().__init__(f"out-of-vocabulary: {word!r} not in slice {slice_id!r}")
        self.word = word
        self.slice_id = slice_id


class AlignmentError(LexshiftError):
    """Alignment could not be fitted (too few anchors, degenerate anchors)."""
