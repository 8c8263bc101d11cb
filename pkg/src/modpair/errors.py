"""Exception types shared across the package.

The CLI reports the concrete class name on stderr, so each failure mode
gets its own class instead of a bare ValueError.
"""


class ModPairError(Exception):
    """Base class for all package errors."""


class ParseError(ModPairError):
    """A JSON Lines record could not be parsed."""


class SchemaError(ModPairError):
    """A record is missing a required field or violates a field contract."""


class DomainError(ModPairError):
    """A value lies outside its documented domain."""


class StratificationError(ModPairError):
    """A label class is too small to split while preserving proportions."""


class BoundsError(ModPairError):
    """A requested sample size exceeds what is available."""


class DegenerateTrainingError(ModPairError):
    """The training set cannot produce a meaningful model."""


class NumericError(ModPairError):
    """Training lost numeric stability."""


class DegenerateInputError(ModPairError):
    """An input is degenerate for the requested computation, e.g. zero norm."""


class PoolTooSmallError(ModPairError):
    """The candidate pool is smaller than the requested selection."""


class GraphError(ModPairError):
    """The federation graph rejects the referenced entity."""


class PeerUnavailableError(ModPairError):
    """The peer has not published the requested artifact (retry next refresh)."""
