"""Domain exceptions shared across the toolkit.

Every error the pipeline can raise on bad data derives from ReidentError so
the CLI can map them to exit code 1 uniformly.
"""


class ReidentError(Exception):
    """Base class for all domain errors."""


class DimensionMismatchError(ReidentError):
    """Vector dimensions disagree within a gallery or against a model."""


class ZeroNormVectorError(ReidentError):
    """A vector with zero Euclidean norm cannot be scored."""


class GalleryParseError(ReidentError):
    """A gallery file is malformed; message carries line or byte offset."""


class DuplicateIdError(ReidentError):
    """Two records in one gallery share an id."""


class EmptyGalleryError(ReidentError):
    """A gallery must contain at least one record."""


class MissingAssignmentError(ReidentError):
    """A record has no cluster assignment during relabeling."""


class SingleClassError(ReidentError):
    """Head training needs at least two classes."""


class EmptyClassError(ReidentError):
    """A requested class has no training samples."""


class NoClientPairsError(ReidentError):
    """Score density estimation found no same-class pair."""


class NoImpostorPairsError(ReidentError):
    """Score density estimation found no cross-model pair."""


class EmptyDensityError(ReidentError):
    """Error-rate curves need at least one client and one impostor score."""


class UnsatisfiableThresholdError(ReidentError):
    """No grid threshold meets the requested FAR/FRR constraint."""


class MissingTrackIdError(ReidentError):
    """Best-shot selection needs a track id on every record."""


class MissingQualityError(ReidentError):
    """Best-shot selection needs a quality value on every record."""


class UnknownTrackError(ReidentError):
    """The requested track id is not in the index."""


class BadQueryError(ReidentError):
    """A search query must set at least one filter field."""
