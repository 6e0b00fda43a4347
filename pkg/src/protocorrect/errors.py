"""Exception hierarchy shared by all protocorrect modules."""


class ProtocorrectError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ProtocorrectError):
    """Vectors (or vector collections) with incompatible dimensions."""


class ZeroVector(ProtocorrectError):
    """A vector whose L2 norm is below the degeneracy threshold."""


class EmptyInput(ProtocorrectError):
    """An operation received an empty sequence where at least one item is required."""


class LengthMismatch(ProtocorrectError):
    """Paired sequences of different lengths."""


class InvalidConfig(ProtocorrectError):
    """A configuration value violates its documented constraints."""


class EmptyStore(ProtocorrectError):
    """A query was issued against a prototype store with no entries."""


class NothingEvictable(ProtocorrectError):
    """Eviction was requested but every entry is protected (or the store is empty)."""


class BudgetUnsatisfiable(ProtocorrectError):
    """An insert cannot satisfy the capacity budget because nothing can be evicted."""


class UnknownClass(ProtocorrectError):
    """A label that is not registered with the store (and open-class mode is off)."""


class EmptyDataset(ProtocorrectError):
    """A dataset (or the required split of it) contains no records."""


class FormatError(ProtocorrectError):
    """A serialized artifact has bad magic, version, counts, or structure."""
