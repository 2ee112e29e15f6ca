"""Exception hierarchy shared across the engine."""


class SimSearchError(Exception):
    """Base class for all simsearch errors."""


class ZeroVectorError(SimSearchError):
    """Vector norm is below the representable threshold (1e-12)."""


class NonFiniteError(SimSearchError):
    """Input contains NaN or Inf."""


class DimMismatchError(SimSearchError):
    """Operand dimensionalities disagree."""


class WidthMismatchError(SimSearchError):
    """Binary codes have different widths or subcode widths."""


class InsufficientDataError(SimSearchError):
    """Not enough samples for the requested decomposition."""


class DuplicateIdError(SimSearchError):
    """Insert of an id that already exists without upsert."""


class EmptyIndexError(SimSearchError):
    """Operation requires a populated index."""


class ShortlistTooSmallError(SimSearchError):
    """Two-stage shortlist size is smaller than k."""


class IoError(SimSearchError):
    """Underlying file operation failed."""


class CorruptSnapshotError(SimSearchError):
    """Snapshot file failed magic or checksum validation."""


class VersionUnsupportedError(SimSearchError):
    """Snapshot or checkpoint version is not readable by this build."""


class NoValidPairsError(SimSearchError):
    """Batch contains no anchor-positive pair."""


class NoNegativesError(SimSearchError):
    """Batch contains a single class, so no negatives exist."""


class InsufficientClassesError(SimSearchError):
    """Training data needs at least two classes."""


class DegenerateActivationError(SimSearchError):
    """Pre-normalization activation collapsed to the zero vector."""


class UnlabeledDataError(SimSearchError):
    """Evaluation queries must carry labels."""
