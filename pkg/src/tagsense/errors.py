"""Exception types shared across the package."""


class TagSenseError(Exception):
    """Base class for all tagsense errors."""


class ParseError(TagSenseError):
    """A record could not be parsed as JSON."""


class SchemaError(TagSenseError):
    """A record or file violates the expected schema."""


class DecodeError(TagSenseError):
    """An image file could not be decoded."""


class MiningError(TagSenseError):
    """Association mining or graph analysis was given unusable input."""


class EmbeddingError(TagSenseError):
    """An embedding file or table is malformed."""


class ShapeError(TagSenseError):
    """Model layers or inputs do not compose shape-wise."""


class DatasetError(TagSenseError):
    """A training dataset could not be assembled as requested."""


class TrainingError(TagSenseError):
    """Training diverged or was misconfigured."""


class SnapshotError(TagSenseError):
    """An index snapshot or checkpoint file is invalid."""
